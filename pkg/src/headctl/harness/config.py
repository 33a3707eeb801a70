"""Experiment configuration: one JSON document with a section per module."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..mrac import ControllerConfig
from ..neuro.training import TrainConfig
from ..plant import PlantParams
from ..vision.pipeline import VisionConfig

KINDS = ("track3dof", "roll_only", "excitation_capture", "train_network", "vision_demo")
SENSING = ("direct", "vision")
F_HAT_MODES = ("network", "oracle", "zero")
GAIN_PRESETS = ("zero", "ideal")

START_POSE = (2.5, 0.25, 35.0)
TARGET_POSE = (14.0, 1.6, 45.0)

DEFAULT_NETWORK = Path(__file__).resolve().parent.parent / "data" / "default_network.npz"


@dataclass
class Waypoint:
    time: float
    z: float
    theta: float
    phi: float

    @property
    def pose(self) -> np.ndarray:
        return np.array([self.z, self.theta, self.phi])


@dataclass
class ExperimentConfig:
    kind: str = "track3dof"
    plant: PlantParams = field(default_factory=PlantParams)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    vision: VisionConfig = field(default_factory=VisionConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    network: str | None = None  # checkpoint path; None selects the bundled default
    f_hat: str = "network"
    mc_dropout: float = 0.0
    gain_preset: str = "zero"
    start: tuple = START_POSE
    waypoints: list = field(default_factory=lambda: [Waypoint(0.0, *TARGET_POSE)])
    duration: float = 120.0
    settle: float = 100.0  # closed-loop regulation at the start pose before t = 0
    control_rate: float = 10.0
    seed: int = 0
    out: str = "runs/out"
    sensing: str = "direct"
    noise_sigma: float = 0.0005
    clutter: int = 0
    excitation_duration: float = 600.0
    dataset: str | None = None  # capture file used by train_network

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.sensing not in SENSING:
            raise ConfigError(f"sensing must be one of {SENSING}, got {self.sensing!r}")
        if self.f_hat not in F_HAT_MODES:
            raise ConfigError(f"f_hat must be one of {F_HAT_MODES}, got {self.f_hat!r}")
        if self.gain_preset not in GAIN_PRESETS:
            raise ConfigError(f"gain_preset must be one of {GAIN_PRESETS}, got {self.gain_preset!r}")
        self.waypoints = [w if isinstance(w, Waypoint) else Waypoint(**w) for w in self.waypoints]
        times = [w.time for w in self.waypoints]
        if times != sorted(times):
            raise ConfigError("waypoints must be sorted by time")
        self.start = tuple(float(v) for v in self.start)
        if len(self.start) != 3:
            raise ConfigError("start must be (z, theta, phi)")
        if not self.control_rate > 0:
            raise ConfigError("control_rate must be positive")
        ratio = 1.0 / (self.control_rate * self.plant.substep)
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ConfigError("control period must be a whole number of plant substeps")
        for name in ("duration", "settle", "excitation_duration"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be nonnegative")

    @property
    def dt(self) -> float:
        return 1.0 / self.control_rate

    def network_path(self) -> Path:
        return Path(self.network) if self.network else DEFAULT_NETWORK

    def reference_at(self, t: float) -> np.ndarray:
        pose = np.array(self.start)
        for w in self.waypoints:
            if t >= w.time - 1e-9:
                pose = w.pose
        return pose

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "plant": self.plant.to_dict(),
            "controller": self.controller.to_dict(),
            "vision": self.vision.to_dict(),
            "train": self.train.to_dict(),
            "network": self.network,
            "f_hat": self.f_hat,
            "mc_dropout": self.mc_dropout,
            "gain_preset": self.gain_preset,
            "start": list(self.start),
            "waypoints": [w.__dict__.copy() for w in self.waypoints],
            "duration": self.duration,
            "settle": self.settle,
            "control_rate": self.control_rate,
            "seed": self.seed,
            "out": self.out,
            "sensing": self.sensing,
            "noise_sigma": self.noise_sigma,
            "clutter": self.clutter,
            "excitation_duration": self.excitation_duration,
            "dataset": self.dataset,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        try:
            if "plant" in d:
                d["plant"] = PlantParams.from_dict(d["plant"])
            if "controller" in d:
                d["controller"] = ControllerConfig.from_dict(d["controller"])
            if "vision" in d:
                d["vision"] = VisionConfig.from_dict(d["vision"])
            if "train" in d:
                d["train"] = TrainConfig.from_dict(d["train"])
            return cls(**d)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)


def preset(kind: str, **overrides) -> ExperimentConfig:
    """Default configurations of the tracking experiments and auxiliary runs."""
    base: dict = {"kind": kind}
    if kind == "roll_only":
        base["waypoints"] = [Waypoint(0.0, START_POSE[0], START_POSE[1], TARGET_POSE[2])]
    base.update(overrides)
    return ExperimentConfig(**base)
