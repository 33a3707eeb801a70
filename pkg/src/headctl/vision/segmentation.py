"""Point-cloud stages: voxel downsampling, consensus plane fit, hull prism, Euclidean clustering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from ..errors import Degenerate, Empty


@dataclass(frozen=True)
class PointCloud:
    """``(N, 3)`` points in meters plus the indices they had in the cloud they were cut from."""

    points: np.ndarray
    indices: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", pts)
        if self.indices is not None:
            idx = np.asarray(self.indices, dtype=np.int64)
            if idx.shape != (len(pts),):
                raise ValueError("indices must have one entry per point")
            object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return len(self.points)

    def source_indices(self) -> np.ndarray:
        return np.arange(len(self.points)) if self.indices is None else self.indices

    def subset(self, idx) -> "PointCloud":
        idx = np.asarray(idx, dtype=np.int64)
        return PointCloud(self.points[idx], self.source_indices()[idx])


def _pts(cloud) -> np.ndarray:
    return cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float).reshape(-1, 3)


def save_cloud(path, cloud) -> None:
    np.savetxt(path, _pts(cloud), fmt="%.17g", header="x y z [m]")


def load_cloud(path) -> PointCloud:
    return PointCloud(np.loadtxt(path, comments="#", ndmin=2))


# downsampling -----------------------------------------------------------------

def downsample_voxel(cloud, leaf: float) -> PointCloud:
    """Replace the points of every occupied ``leaf``-sized voxel by their centroid."""
    if not leaf > 0:
        raise ValueError("leaf must be positive")
    pts = _pts(cloud)
    if len(pts) == 0:
        return PointCloud(pts)
    keys = np.floor(pts / leaf).astype(np.int64)
    _, inv, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inv = inv.reshape(-1)
    sums = np.zeros((len(counts), 3))
    np.add.at(sums, inv, pts)
    return PointCloud(sums / counts[:, None])


# plane ----------------------------------------------------------------------

@dataclass(frozen=True)
class PlaneModel:
    """``a x + b y + c z + d = 0`` with unit normal ``(a, b, c)``."""

    a: float
    b: float
    c: float
    d: float

    @property
    def normal(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])

    def distance(self, pts) -> np.ndarray:
        """Signed point-plane distance."""
        return _pts(pts) @ self.normal + self.d

    def flipped(self) -> "PlaneModel":
        return PlaneModel(-self.a, -self.b, -self.c, -self.d)

    @classmethod
    def from_points(cls, p0, p1, p2) -> "PlaneModel":
        n = np.cross(p1 - p0, p2 - p0)
        n = n / np.linalg.norm(n)
        return cls(float(n[0]), float(n[1]), float(n[2]), float(-n @ p0))


def _collinear(p0, p1, p2, rel_tol: float = 1e-10) -> bool:
    u = p1 - p0
    v = p2 - p0
    scale = np.linalg.norm(u) * np.linalg.norm(v)
    return scale == 0.0 or np.linalg.norm(np.cross(u, v)) <= rel_tol * scale


def segment_plane(cloud, d_max: float, iterations: int = 200, seed: int = 0) -> tuple[PlaneModel, np.ndarray]:
    """Maximum-consensus plane from ``iterations`` random non-collinear triples.

    Each hypothesis counts points within ``d_max`` of its plane; the first
    hypothesis with the largest count wins.  Returns ``(plane, inlier_indices)``.
    """
    pts = _pts(cloud)
    if len(pts) < 3:
        raise Degenerate("need at least 3 points")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    rng = np.random.default_rng(seed)
    best, best_count, draws, found = None, -1, 0, 0
    while found < iterations:
        if draws >= 100 * iterations:
            if best is None:
                raise Degenerate(f"no non-collinear triple in {draws} draws")
            break
        draws += 1
        i, j, k = rng.choice(len(pts), 3, replace=False)
        p0, p1, p2 = pts[i], pts[j], pts[k]
        if _collinear(p0, p1, p2):
            continue
        found += 1
        plane = PlaneModel.from_points(p0, p1, p2)
        count = int(np.count_nonzero(np.abs(plane.distance(pts)) <= d_max))
        if count > best_count:
            best, best_count = plane, count
    inliers = np.flatnonzero(np.abs(best.distance(pts)) <= d_max)
    return best, inliers


def refine_plane(cloud, inliers) -> PlaneModel:
    """Total-least-squares plane through the inliers (smallest principal axis as normal)."""
    pts = _pts(cloud)[np.asarray(inliers)]
    if len(pts) < 3:
        raise Degenerate("need at least 3 inliers")
    mu = pts.mean(axis=0)
    _, _, vt = np.linalg.svd(pts - mu, full_matrices=False)
    n = vt[-1]
    return PlaneModel(float(n[0]), float(n[1]), float(n[2]), float(-n @ mu))


def orient_plane(plane: PlaneModel, cloud, inliers) -> PlaneModel:
    """Point the normal toward the side holding most off-plane points (objects rest on the table)."""
    pts = _pts(cloud)
    mask = np.ones(len(pts), dtype=bool)
    mask[inliers] = False
    if not mask.any():
        return plane
    return plane if np.median(plane.distance(pts[mask])) >= 0 else plane.flipped()


# hull and prism ---------------------------------------------------------------

def _cross2(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_2d(points) -> np.ndarray:
    """Monotone-chain hull, counterclockwise, without collinear boundary points."""
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(P) < 3:
        raise Degenerate("need at least 3 points")
    P = np.unique(P, axis=0)  # lexicographic sort, duplicates dropped
    pts = [tuple(p) for p in P]
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross2(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross2(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise Degenerate("input points are collinear")
    return np.array(hull)


def points_in_polygon(poly, q, tol: float = 1e-12) -> np.ndarray:
    """Boundary-inclusive containment test for a counterclockwise convex polygon."""
    q = np.asarray(q, dtype=float).reshape(-1, 2)
    a = np.asarray(poly, dtype=float)
    b = np.roll(a, -1, axis=0)
    e = b - a
    scale = np.max(np.abs(a)) if len(a) else 1.0
    cross = e[None, :, 0] * (q[:, None, 1] - a[None, :, 1]) - e[None, :, 1] * (q[:, None, 0] - a[None, :, 0])
    return np.all(cross >= -tol * max(scale, 1.0) * np.linalg.norm(e, axis=1)[None, :], axis=1)


@dataclass(frozen=True)
class PlaneHull:
    """Convex hull of the plane inliers, in a 2-D basis ``(origin, e1, e2)`` of the plane."""

    plane: PlaneModel
    origin: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    polygon: np.ndarray

    def project(self, pts) -> np.ndarray:
        rel = _pts(pts) - self.origin
        return np.stack([rel @ self.e1, rel @ self.e2], axis=1)


def plane_hull(plane: PlaneModel, cloud, inliers) -> PlaneHull:
    pts = _pts(cloud)[np.asarray(inliers)]
    n = plane.normal
    helper = np.eye(3)[int(np.argmin(np.abs(n)))]
    e1 = np.cross(n, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    origin = -plane.d * n
    tmp = PlaneHull(plane, origin, e1, e2, np.zeros((0, 2)))
    return PlaneHull(plane, origin, e1, e2, convex_hull_2d(tmp.project(pts)))


def extrude_prism(hull: PlaneHull, cloud, h_min: float, h_max: float) -> np.ndarray:
    """Indices of points over the hull whose height along the plane normal lies in ``[h_min, h_max]``."""
    if not h_min < h_max:
        raise ValueError("h_min must be below h_max")
    pts = _pts(cloud)
    h = hull.plane.distance(pts)
    band = np.flatnonzero((h >= h_min) & (h <= h_max))
    inside = points_in_polygon(hull.polygon, hull.project(pts[band]))
    return band[inside]


# clustering -------------------------------------------------------------------

_OFFSETS = np.array([(i, j, k) for i in (-1, 0, 1) for j in (-1, 0, 1) for k in (-1, 0, 1)])


def neighbor_pairs(pts: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """All pairs ``i < j`` with ``||p_i - p_j|| <= tol``, found by hashing points into ``tol``-sized cells."""
    n = len(pts)
    if n < 2:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    cells = np.floor(pts / tol).astype(np.int64)
    cells -= cells.min(axis=0) - 1  # keep neighbor offsets nonnegative
    dims = cells.max(axis=0) + 2
    key = (cells[:, 0] * dims[1] + cells[:, 1]) * dims[2] + cells[:, 2]
    order = np.argsort(key, kind="stable")
    skey = key[order]
    I, J = [], []
    for off in _OFFSETS:
        nkey = key + (off[0] * dims[1] + off[1]) * dims[2] + off[2]
        lo = np.searchsorted(skey, nkey, side="left")
        hi = np.searchsorted(skey, nkey, side="right")
        cnt = hi - lo
        total = int(cnt.sum())
        if total == 0:
            continue
        i = np.repeat(np.arange(n), cnt)
        # position within each run, then offset into the sorted order
        start = np.repeat(lo - np.concatenate([[0], np.cumsum(cnt)[:-1]]), cnt)
        j = order[np.arange(total) + start]
        keep = i < j
        i, j = i[keep], j[keep]
        d2 = np.sum((pts[i] - pts[j]) ** 2, axis=1)
        close = d2 <= tol * tol
        I.append(i[close])
        J.append(j[close])
    if not I:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(I), np.concatenate(J)


def euclidean_cluster(cloud, tol: float, min_size: int = 1) -> list[np.ndarray]:
    """Single-linkage components under ``distance <= tol``, largest first.

    Clusters smaller than ``min_size`` are dropped; ties in size are broken
    by the smallest member index.  Each cluster is a sorted index array.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    pts = _pts(cloud)
    n = len(pts)
    if n == 0:
        return []
    i, j = neighbor_pairs(pts, tol)
    graph = coo_matrix((np.ones(len(i), dtype=np.int8), (i, j)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    order = np.argsort(labels, kind="stable")
    bounds = np.flatnonzero(np.diff(labels[order])) + 1
    clusters = [c for c in np.split(order, bounds) if len(c) >= min_size]
    clusters.sort(key=lambda c: (-len(c), int(c[0])))
    return clusters


def centroid(cloud) -> np.ndarray:
    pts = _pts(cloud)
    if len(pts) == 0:
        raise Empty("centroid of an empty point set")
    return pts.mean(axis=0)


def fit_sphere(pts) -> tuple[np.ndarray, float]:
    """Algebraic least-squares sphere ``||p - c||^2 = r^2``; returns ``(center, radius)``."""
    pts = _pts(pts)
    if len(pts) < 4:
        raise Degenerate("need at least 4 points for a sphere fit")
    A = np.hstack([2.0 * pts, np.ones((len(pts), 1))])
    b = np.sum(pts * pts, axis=1)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    c = sol[:3]
    r2 = sol[3] + c @ c
    if not r2 > 0:
        raise Degenerate("sphere fit has no real radius")
    return c, float(np.sqrt(r2))
