"""Cloud-to-state pipeline: downsample, table removal, prism, clustering, marker association, registration."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations

import numpy as np

from ..errors import Degenerate, FaceNotFound
from .geometry import Pose, quat_to_rpy
from .registration import estimate_pose
from .scene import SceneConfig, model_landmarks
from .segmentation import (PlaneHull, PointCloud, _pts, centroid, downsample_voxel, euclidean_cluster,
                           extrude_prism, fit_sphere, orient_plane, plane_hull, refine_plane, segment_plane)


@dataclass
class VisionConfig:
    leaf: float = 0.005
    d_max: float = 0.005
    ransac_iterations: int = 200
    ransac_seed: int = 0
    cluster_tol: float = 0.015
    face_min_size: int = 50
    h_min: float = 0.010
    h_max: float = 0.300
    marker_min_points: int = 3
    marker_search_radius: float = 0.3
    radius_tol: float = 0.002
    refine_plane: bool = True
    match_tol: float = 0.01  # summed side-length mismatch allowed when matching the marker triangle
    scene: SceneConfig = field(default_factory=SceneConfig)

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "scene"}
        d["scene"] = self.scene.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "VisionConfig":
        d = dict(d)
        if "scene" in d:
            d["scene"] = SceneConfig.from_dict(d["scene"])
        return cls(**d)


@dataclass(frozen=True)
class Measurement:
    state: np.ndarray  # (z mm above rest, pitch deg, roll deg)
    pose: Pose  # head frame -> camera frame
    face_centroid: np.ndarray
    face_size: int
    markers: np.ndarray  # measured marker centers, model order


def _side_lengths(T: np.ndarray) -> np.ndarray:
    return np.array([np.linalg.norm(T[0] - T[1]), np.linalg.norm(T[1] - T[2]), np.linalg.norm(T[0] - T[2])])


class PoseMeter:
    """Stateful wrapper that segments the table once and reuses it for every later frame."""

    def __init__(self, cfg: VisionConfig | None = None):
        self.cfg = cfg or VisionConfig()
        self.model = model_landmarks(self.cfg.scene)
        self._model_sides = _side_lengths(self.model)
        self._hull: PlaneHull | None = None

    @property
    def hull(self) -> PlaneHull | None:
        return self._hull

    def table(self, ds: PointCloud) -> PlaneHull:
        if self._hull is None:
            c = self.cfg
            plane, inliers = segment_plane(ds, c.d_max, c.ransac_iterations, c.ransac_seed)
            if c.refine_plane:
                plane = refine_plane(ds, inliers)
                inliers = np.flatnonzero(np.abs(plane.distance(ds)) <= c.d_max)
            plane = orient_plane(plane, ds, inliers)
            self._hull = plane_hull(plane, ds, inliers)
        return self._hull

    def _marker_candidates(self, raw: np.ndarray, pts: np.ndarray, clusters, face_c: np.ndarray) -> list:
        c = self.cfg
        r = c.scene.marker_radius
        out = []
        for cl in clusters[1:]:
            if len(cl) < c.marker_min_points:
                continue
            m = centroid(pts[cl])
            if np.linalg.norm(m - face_c) > c.marker_search_radius:
                continue
            near = raw[np.sum((raw - m) ** 2, axis=1) <= (2.0 * r) ** 2]
            try:
                center, radius = fit_sphere(near)
            except Degenerate:
                continue
            if abs(radius - r) <= c.radius_tol:
                out.append(center)
        return out

    def _associate(self, cands: list) -> np.ndarray:
        best, best_cost = None, np.inf
        for trio in combinations(range(len(cands)), 3):
            for perm in permutations(trio):
                T = np.array([cands[i] for i in perm])
                cost = float(np.sum(np.abs(_side_lengths(T) - self._model_sides)))
                if cost < best_cost:
                    best, best_cost = T, cost
        if best is None or best_cost > self.cfg.match_tol:
            raise FaceNotFound(f"marker triangle not found among {len(cands)} candidates")
        return best

    def measure(self, cloud) -> Measurement:
        c = self.cfg
        raw = _pts(cloud)
        ds = downsample_voxel(raw, c.leaf)
        hull = self.table(ds)
        idx = extrude_prism(hull, ds, c.h_min, c.h_max)
        pts = ds.points[idx]
        clusters = euclidean_cluster(pts, c.cluster_tol)
        if not clusters or len(clusters[0]) < c.face_min_size:
            size = len(clusters[0]) if clusters else 0
            raise FaceNotFound(f"largest cluster has {size} points (< {c.face_min_size})")
        face_c = centroid(pts[clusters[0]])
        markers = self._associate(self._marker_candidates(raw, pts, clusters, face_c))
        # registration maps measured markers onto the model; the head pose is its inverse
        head = estimate_pose(self.model, markers).inverse()
        theta, phi, _ = quat_to_rpy(head.q_R)
        z_mm = (float(hull.plane.distance(head.q_T[None, :])[0]) - c.scene.rest_height) * 1000.0
        return Measurement(np.array([z_mm, theta, phi]), head, face_c, len(clusters[0]), markers)


def measure_pose(cloud, cfg: VisionConfig | None = None, meter: PoseMeter | None = None) -> tuple[float, float, float]:
    """``(z mm, pitch deg, roll deg)`` of the head in ``cloud``; pass ``meter`` to reuse its cached table."""
    meter = meter or PoseMeter(cfg)
    z, theta, phi = meter.measure(cloud).state
    return float(z), float(theta), float(phi)
