"""Closed-form rigid registration of corresponding point sets (unit-quaternion method)."""

from __future__ import annotations

import numpy as np

from ..errors import Degenerate, DimensionMismatch
from ..numerics import max_eigpair_sym4
from .geometry import Pose


def _check_noncollinear(pts: np.ndarray, name: str) -> None:
    c = pts - pts.mean(axis=0)
    s = np.linalg.svd(c, compute_uv=False)
    if len(s) < 2 or s[1] <= 1e-12 * max(s[0], 1e-300):
        raise Degenerate(f"{name} points are collinear")


def cross_covariance(X, P) -> np.ndarray:
    """``Sigma_px = mean((p - mu_p)(x - mu_x)^T)``."""
    return (P - P.mean(axis=0)).T @ (X - X.mean(axis=0)) / len(P)


def q_matrix(S: np.ndarray) -> np.ndarray:
    """Symmetric 4x4 matrix whose top eigenvector is the optimal rotation quaternion."""
    A = S - S.T
    delta = np.array([A[1, 2], A[2, 0], A[0, 1]])
    tr = np.trace(S)
    Q = np.empty((4, 4))
    Q[0, 0] = tr
    Q[0, 1:] = delta
    Q[1:, 0] = delta
    Q[1:, 1:] = S + S.T - tr * np.eye(3)
    return Q


def estimate_pose(X, P_meas) -> Pose:
    """Rigid motion mapping ``P_meas`` onto ``X`` in the least-squares sense.

    ``x_i ~ R(q_R) p_i + q_T`` with ``q_T = mu_x - R mu_p``; row ``i`` of each
    array must describe the same physical point.
    """
    X = np.asarray(X, dtype=float)
    P = np.asarray(P_meas, dtype=float)
    if X.shape != P.shape or X.ndim != 2 or X.shape[1] != 3:
        raise DimensionMismatch("X and P_meas must both be (n, 3) with equal n")
    if len(X) < 3:
        raise Degenerate("need at least 3 correspondences")
    _check_noncollinear(X, "model")
    _check_noncollinear(P, "measured")
    _, q = max_eigpair_sym4(q_matrix(cross_covariance(X, P)))
    pose = Pose(q, np.zeros(3))
    return Pose(pose.q_R, X.mean(axis=0) - pose.R @ P.mean(axis=0))
