"""Synthetic depth scenes: a table plane, an ellipsoidal head with three marker spheres, optional clutter.

The camera frame coincides with the table frame: the table is ``z = 0`` and
``+z`` points up.  Head-frame axes are x (ear to ear), y (crown to chin) and
z (out of the face).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose
from .segmentation import PointCloud

LABEL_TABLE = 0
LABEL_HEAD = 1
LABEL_MARKER = 2  # markers k = 0, 1, 2 get labels 2, 3, 4
LABEL_CLUTTER = -1

# marker anchor directions in the head frame (nose tip, chin, forehead analogues)
MARKER_DIRECTIONS = np.array([
    [0.0, 0.3, 1.0],
    [0.55, 0.85, 0.5],
    [-0.6, -0.6, 0.7],
])


@dataclass
class SceneConfig:
    head_axes: np.ndarray = field(default_factory=lambda: np.array([0.0775, 0.120, 0.100]))
    rest_height: float = 0.13
    head_density: float = 40000.0  # points per m^2
    marker_radius: float = 0.008
    marker_offset: float = 0.028  # gap between head surface and marker center
    marker_density: float = 1.0e6
    table_half: float = 0.3
    table_spacing: float = 0.008
    clutter_size: float = 0.05
    clutter_density: float = 40000.0

    def __post_init__(self):
        self.head_axes = np.asarray(self.head_axes, dtype=float)

    def to_dict(self) -> dict:
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "SceneConfig":
        return cls(**d)


def ellipsoid_point(axes, direction) -> tuple[np.ndarray, np.ndarray]:
    """Surface point along ``direction`` from the center, and the outward unit normal there."""
    d = np.asarray(direction, dtype=float)
    p = d / np.sqrt(np.sum((d / axes) ** 2))
    n = p / axes ** 2
    return p, n / np.linalg.norm(n)


def model_landmarks(cfg: SceneConfig | None = None) -> np.ndarray:
    """Marker centers in the head frame, one row per marker."""
    cfg = cfg or SceneConfig()
    rows = []
    for d in MARKER_DIRECTIONS:
        p, n = ellipsoid_point(cfg.head_axes, d)
        rows.append(p + cfg.marker_offset * n)
    return np.array(rows)


def state_to_pose(y, cfg: SceneConfig | None = None) -> Pose:
    """Plant state ``(z mm above rest, pitch deg, roll deg)`` to the head pose in the camera frame."""
    cfg = cfg or SceneConfig()
    z, theta, phi = (float(v) for v in y)
    return Pose.from_xyzrpy(0.0, 0.0, cfg.rest_height + z / 1000.0, theta, phi, 0.0)


def _sample_ellipsoid(rng, axes, n) -> np.ndarray:
    """Area-uniform samples on an ellipsoid surface (rejection on the sphere map's area factor)."""
    a, b, c = axes
    fmax = max(b * c, a * c, a * b)
    out = []
    have = 0
    while have < n:
        u = rng.standard_normal((2 * (n - have) + 16, 3))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        f = np.sqrt((b * c * u[:, 0]) ** 2 + (a * c * u[:, 1]) ** 2 + (a * b * u[:, 2]) ** 2)
        keep = u[rng.random(len(u)) * fmax < f]
        out.append(keep)
        have += len(keep)
    return np.concatenate(out)[:n] * axes


def _ellipsoid_area(axes) -> float:
    # Knud Thomsen approximation, within about 1%
    p = 1.6075
    a, b, c = axes
    return float(4 * np.pi * (((a * b) ** p + (a * c) ** p + (b * c) ** p) / 3) ** (1 / p))


@dataclass
class SceneSample:
    cloud: PointCloud
    labels: np.ndarray
    X: np.ndarray
    P_meas: np.ndarray

    def __iter__(self):
        return iter((self.cloud, self.X, self.P_meas))


def synth_scene(true_pose: Pose, density: float | None = None, noise_sigma: float = 0.0, clutter: int = 0,
                seed: int = 0, cfg: SceneConfig | None = None) -> SceneSample:
    """Render a labelled cloud of the head at ``true_pose`` resting over the table.

    ``density`` overrides the head surface density (points per m^2).  ``X`` are
    the model landmarks (head frame); ``P_meas`` the same landmarks at the true pose.
    """
    cfg = cfg or SceneConfig()
    density = cfg.head_density if density is None else density
    if not density > 0:
        raise ValueError("density must be positive")
    rng = np.random.default_rng(seed)
    parts, labels = [], []

    g = np.arange(-cfg.table_half, cfg.table_half + 1e-12, cfg.table_spacing)
    gx, gy = np.meshgrid(g, g, indexing="ij")
    table = np.stack([gx.ravel(), gy.ravel(), np.zeros(gx.size)], axis=1)
    parts.append(table)
    labels.append(np.full(len(table), LABEL_TABLE))

    n_head = max(int(round(density * _ellipsoid_area(cfg.head_axes))), 1)
    head = true_pose.apply(_sample_ellipsoid(rng, cfg.head_axes, n_head))
    parts.append(head)
    labels.append(np.full(len(head), LABEL_HEAD))

    X = model_landmarks(cfg)
    P_meas = true_pose.apply(X)
    r = cfg.marker_radius
    n_marker = max(int(round(cfg.marker_density * 4 * np.pi * r * r)), 4)
    for k, center in enumerate(P_meas):
        s = rng.standard_normal((n_marker, 3))
        s *= r / np.linalg.norm(s, axis=1, keepdims=True)
        parts.append(center + s)
        labels.append(np.full(n_marker, LABEL_MARKER + k))

    for _ in range(clutter):
        # box resting on the table, kept clear of the head footprint
        ang = rng.uniform(0, 2 * np.pi)
        rad = rng.uniform(0.2, cfg.table_half - cfg.clutter_size)
        cx, cy = rad * np.cos(ang), rad * np.sin(ang)
        size = cfg.clutter_size * rng.uniform(0.8, 1.2, 3)
        n_box = max(int(round(cfg.clutter_density * 2 * (size[0] * size[1] + size[0] * size[2] + size[1] * size[2]))), 8)
        face = rng.integers(0, 6, n_box)
        uvw = rng.random((n_box, 3))
        axis = face // 2
        uvw[np.arange(n_box), axis] = face % 2
        box = (uvw - [0.5, 0.5, 0.0]) * size + [cx, cy, 0.0]
        parts.append(box)
        labels.append(np.full(n_box, LABEL_CLUTTER))

    pts = np.concatenate(parts)
    if noise_sigma > 0:
        pts = pts + rng.normal(0.0, noise_sigma, pts.shape)
    return SceneSample(PointCloud(pts), np.concatenate(labels), X, P_meas)
