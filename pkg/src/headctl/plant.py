"""Simulated 3-DOF head-and-bladder plant.

State is ``y = (z [mm], pitch [deg], roll [deg])``; input is six valve duty
cycles.  Dynamics::

    dy/dt = A y + B Lambda (u - f(y)) + w(t)

with a bounded tanh matched nonlinearity ``f`` and a deterministic
sinusoidal disturbance ``w``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .numerics import dp5_step

N_STATES = 3
N_INPUTS = 6

# valve pairs: (0,1) base bladder lift, (2,3) base bladder tilt, (4,5) side bladders
PAIRING = np.kron(np.eye(N_STATES), np.ones((1, 2)))

_W_FREQ = np.array([0.7, 1.1, 1.3])
_W_PHASE = np.array([0.0, 1.0, 2.0])


def default_A() -> np.ndarray:
    return np.diag([-0.2, -0.2, -0.6])


def default_Lambda() -> np.ndarray:
    return np.diag([2.5, 2.5, 1.6, 1.6, 27.0, 27.0])


@dataclass
class PlantParams:
    A: np.ndarray = field(default_factory=default_A)
    B: np.ndarray = field(default_factory=lambda: PAIRING.copy())
    Lambda: np.ndarray = field(default_factory=default_Lambda)
    w_max: float = 0.05
    c: float = 0.5
    s: np.ndarray = field(default_factory=lambda: np.array([20.0, 2.0, 45.0]))
    seed: int = 42
    W: np.ndarray | None = None
    clamp: bool = True
    substep: float = 0.01

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float).reshape(N_STATES, N_STATES)
        self.B = np.asarray(self.B, dtype=float).reshape(N_STATES, N_INPUTS)
        self.Lambda = np.asarray(self.Lambda, dtype=float).reshape(N_INPUTS, N_INPUTS)
        self.s = np.asarray(self.s, dtype=float).reshape(N_STATES)
        lam = np.diag(self.Lambda)
        if np.any(self.Lambda - np.diag(lam)) or np.any(lam <= 0):
            raise ValueError("Lambda must be diagonal with strictly positive entries")
        if self.w_max < 0:
            raise ValueError("w_max must be nonnegative")
        if np.any(self.s <= 0):
            raise ValueError("normalisation scales must be positive")
        if self.W is None:
            self.W = np.random.default_rng(self.seed).standard_normal((N_INPUTS, N_STATES))
        else:
            self.W = np.asarray(self.W, dtype=float).reshape(N_INPUTS, N_STATES)
        self._BL = self.B @ self.Lambda

    @property
    def BL(self) -> np.ndarray:
        return self._BL

    def lipschitz_constant(self) -> float:
        return float(self.c * np.linalg.norm(self.W, 2) / np.min(self.s))

    def to_dict(self) -> dict:
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "Lambda": self.Lambda.tolist(),
            "w_max": self.w_max,
            "c": self.c,
            "s": self.s.tolist(),
            "seed": self.seed,
            "clamp": self.clamp,
            "substep": self.substep,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PlantParams":
        d = dict(d)
        if "Lambda_diag" in d:
            d["Lambda"] = np.diag(d.pop("Lambda_diag"))
        if "A_diag" in d:
            d["A"] = np.diag(d.pop("A_diag"))
        return cls(**d)


@dataclass(frozen=True)
class PlantState:
    y: np.ndarray
    t: float = 0.0
    substeps: int = 0


def true_f(params: PlantParams, y) -> np.ndarray:
    """Matched nonlinearity ``c * tanh(W (y / s))``."""
    return params.c * np.tanh(params.W @ (np.asarray(y, dtype=float) / params.s))


def disturbance(params: PlantParams, t: float) -> np.ndarray:
    """``w_max (sin 0.7t, sin(1.1t + 1), sin(1.3t + 2)) / sqrt(3)``."""
    return (params.w_max / np.sqrt(3.0)) * np.sin(_W_FREQ * t + _W_PHASE)


def clamp_duty(u) -> np.ndarray:
    return np.clip(np.asarray(u, dtype=float), 0.0, 1.0)


def plant_derivative(params: PlantParams, y, u, t: float) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    return params.A @ y + params.BL @ (u - true_f(params, y)) + disturbance(params, t)


def step_plant(params: PlantParams, state: PlantState, u, dt: float) -> PlantState:
    """Advance by ``dt`` holding ``u`` (zero-order hold), with DP5 substeps of ``params.substep``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    h = params.substep
    n = int(round(dt / h))
    if n < 1 or abs(n * h - dt) > 1e-9:
        raise ValueError(f"dt={dt} is not a multiple of the plant substep {h}")
    u = clamp_duty(u) if params.clamp else np.asarray(u, dtype=float)

    # same expression as plant_derivative, regrouped to keep numpy call overhead low
    A = params.A
    M = params.c * params.BL
    Ws = params.W / params.s
    BLu = params.BL @ u
    wk = params.w_max / np.sqrt(3.0)

    def rhs(t, y):
        return A @ y - M @ np.tanh(Ws @ y) + (BLu + wk * np.sin(_W_FREQ * t + _W_PHASE))

    y = np.asarray(state.y, dtype=float)
    t0 = state.t
    for i in range(n):
        y = dp5_step(rhs, t0 + i * h, y, h).state_next
    return replace(state, y=y, t=t0 + dt, substeps=state.substeps + n)
