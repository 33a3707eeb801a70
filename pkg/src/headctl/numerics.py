"""Small dense-matrix utilities: Lyapunov solver, 4x4 symmetric eigenpair, Dormand-Prince stepper."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NonFiniteDerivative, NotSymmetric, SingularSystem

VectorField = Callable[[float, np.ndarray], np.ndarray]


def _check_symmetric(M: np.ndarray, tol: float) -> None:
    if M.shape[0] != M.shape[1] or np.max(np.abs(M - M.T), initial=0.0) > tol:
        raise NotSymmetric(f"matrix not symmetric within {tol:g}")


def _is_triangular(M: np.ndarray) -> bool:
    return np.allclose(M, np.tril(M), rtol=0, atol=0) or np.allclose(M, np.triu(M), rtol=0, atol=0)


def solve_lyapunov(A_m, Q) -> np.ndarray:
    """Solve ``P A_m + A_m^T P = -Q`` for symmetric P.

    The equation is vectorised row-major into a 9x9 (generally n^2 x n^2)
    Kronecker system and the result is symmetrised.
    """
    A_m = np.asarray(A_m, dtype=float)
    Q = np.asarray(Q, dtype=float)
    n = A_m.shape[0]
    if A_m.shape != (n, n) or Q.shape != (n, n):
        raise ValueError("A_m and Q must be square and of equal size")
    _check_symmetric(Q, 1e-12)
    if _is_triangular(A_m) and np.any(np.diag(A_m) >= 0.0):
        raise ValueError("A_m is not Hurwitz")

    eye = np.eye(n)
    # row-major vec: vec(P A) = (I kron A^T) vec(P), vec(A^T P) = (A^T kron I) vec(P)
    K = np.kron(eye, A_m.T) + np.kron(A_m.T, eye)
    if np.linalg.matrix_rank(K) < n * n:
        raise SingularSystem("Lyapunov operator is singular; A_m has eigenvalues summing to zero")
    P = np.linalg.solve(K, -Q.reshape(-1)).reshape(n, n)
    return 0.5 * (P + P.T)


def lyapunov_residual(P, A_m, Q) -> float:
    P, A_m, Q = (np.asarray(m, dtype=float) for m in (P, A_m, Q))
    return float(np.max(np.abs(P @ A_m + A_m.T @ P + Q)))


def jacobi_eigh(M, tol: float = 1e-15, max_sweeps: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi eigendecomposition of a small symmetric matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvectors as columns, unsorted.
    """
    A = np.array(M, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    scale = max(np.linalg.norm(A), 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J with J the (p, q) plane rotation
                ap = A[:, p].copy()
                aq = A[:, q].copy()
                A[:, p] = c * ap - s * aq
                A[:, q] = s * ap + c * aq
                ap = A[p, :].copy()
                aq = A[q, :].copy()
                A[p, :] = c * ap - s * aq
                A[q, :] = s * ap + c * aq
                vp = V[:, p].copy()
                vq = V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    return np.diag(A).copy(), V


def max_eigpair_sym4(M) -> tuple[float, np.ndarray]:
    """Largest eigenvalue of a symmetric 4x4 matrix and its unit eigenvector."""
    M = np.asarray(M, dtype=float)
    if M.shape != (4, 4):
        raise ValueError("expected a 4x4 matrix")
    _check_symmetric(M, 1e-9)
    evals, evecs = jacobi_eigh(0.5 * (M + M.T))
    i = int(np.argmax(evals))
    v = evecs[:, i]
    v = v / np.linalg.norm(v)
    return float(evals[i]), v


@dataclass(frozen=True)
class OdeStepResult:
    state_next: np.ndarray
    error_estimate: float


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.zeros((7, 7))
_A[1, :1] = [1 / 5]
_A[2, :2] = [3 / 40, 9 / 40]
_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def dp5_step(f: VectorField, t: float, x, h: float) -> OdeStepResult:
    """One fixed Dormand-Prince step of size ``h``.

    ``state_next`` is the 5th-order solution; ``error_estimate`` is the
    max-norm of the embedded 5th-minus-4th difference.
    """
    if not h > 0:
        raise ValueError("step size must be positive")
    x = np.asarray(x, dtype=float)
    k = np.empty((7,) + x.shape)
    # a non-finite stage is reported below, so suppress numpy's warnings while it propagates
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        k[0] = f(t, x)
        for i in range(1, 7):
            k[i] = f(t + _C[i] * h, x + h * (_A[i, :i] @ k[:i]))
    if not np.isfinite(k).all():
        bad = int(np.argmin(np.isfinite(k).reshape(7, -1).all(axis=1)))
        raise NonFiniteDerivative(f"non-finite derivative at stage {bad + 1}, t={t + _C[bad] * h:g}")
    # stage 7 is evaluated at the 5th-order solution (FSAL)
    x_next = x + h * (_B5 @ k)
    err = h * (_E @ k)
    return OdeStepResult(state_next=x_next, error_estimate=float(np.max(np.abs(err), initial=0.0)))


def dp5_integrate(f: VectorField, t0: float, x0, duration: float, h: float) -> tuple[np.ndarray, int]:
    """Integrate over ``duration`` with fixed steps of ``h``; returns ``(x, n_steps)``.

    ``duration`` must be a positive multiple of ``h`` to within 1e-9.
    """
    n = int(round(duration / h))
    if n < 1 or abs(n * h - duration) > 1e-9:
        raise ValueError(f"duration {duration} is not a positive multiple of step {h}")
    x = np.asarray(x0, dtype=float)
    t = t0
    for i in range(n):
        x = dp5_step(f, t, x, h).state_next
        t = t0 + (i + 1) * h
    return x, n
