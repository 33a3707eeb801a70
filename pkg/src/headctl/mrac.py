"""Model-reference adaptive control law, adaptation laws and Lyapunov diagnostics.

Control law::

    u = K_y^T y + K_r^T r + f_hat            (clamped to [0, 1])

Adaptation laws::

    dK_y/dt = -Gamma_y y e^T P B sgn(Lambda)
    dK_r/dt = -Gamma_r r e^T P B sgn(Lambda)
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .numerics import dp5_step, solve_lyapunov
from .plant import PAIRING
from .refmodel import default_Am


def _spd(M: np.ndarray, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.shape[0] != M.shape[1] or not np.allclose(M, M.T, rtol=0, atol=1e-12):
        raise ValueError(f"{name} must be symmetric")
    if np.min(np.linalg.eigvalsh(M)) <= 0:
        raise ValueError(f"{name} must be positive definite")
    return M


@dataclass(frozen=True)
class GainSet:
    K_y: np.ndarray
    K_r: np.ndarray
    Gamma_y: np.ndarray
    Gamma_r: np.ndarray
    ode_steps: int = 0

    def __post_init__(self):
        if self.K_y.shape != (3, 6) or self.K_r.shape != (6, 6):
            raise ValueError("K_y must be 3x6 and K_r 6x6")
        _spd(self.Gamma_y, "Gamma_y")
        _spd(self.Gamma_r, "Gamma_r")

    @classmethod
    def zeros(cls, gamma_y: float, gamma_r: float) -> "GainSet":
        return cls(np.zeros((3, 6)), np.zeros((6, 6)), gamma_y * np.eye(3), gamma_r * np.eye(6))

    def norms(self) -> tuple[float, float]:
        return float(np.linalg.norm(self.K_y)), float(np.linalg.norm(self.K_r))


@dataclass
class ControllerConfig:
    Q: np.ndarray = field(default_factory=lambda: 100.0 * np.eye(3))
    A_m: np.ndarray = field(default_factory=default_Am)
    B: np.ndarray = field(default_factory=lambda: PAIRING.copy())
    sgn_Lambda: np.ndarray = field(default_factory=lambda: np.eye(6))
    eps_max: float = 0.1
    gain_ode_step: float = 0.01
    gamma_y: float = 4e-9
    gamma_r: float = 1.6e-8
    P: np.ndarray | None = None

    def __post_init__(self):
        self.Q = _spd(self.Q, "Q")
        self.A_m = np.asarray(self.A_m, dtype=float)
        self.B = np.asarray(self.B, dtype=float)
        self.sgn_Lambda = np.asarray(self.sgn_Lambda, dtype=float)
        d = np.diag(self.sgn_Lambda)
        if np.any(self.sgn_Lambda - np.diag(d)) or not np.all(np.abs(d) == 1.0):
            raise ValueError("sgn_Lambda must be diagonal with +-1 entries")
        if self.eps_max < 0:
            raise ValueError("eps_max must be nonnegative")
        if self.P is None:
            self.P = solve_lyapunov(self.A_m, self.Q)
        self.P = np.asarray(self.P, dtype=float)
        resid = np.max(np.abs(self.P @ self.A_m + self.A_m.T @ self.P + self.Q))
        if resid > 1e-9:
            raise ValueError(f"P does not solve the Lyapunov equation (residual {resid:.3g})")
        self._PBs = self.P @ self.B @ self.sgn_Lambda

    @property
    def PBsgn(self) -> np.ndarray:
        return self._PBs

    def initial_gains(self) -> GainSet:
        return GainSet.zeros(self.gamma_y, self.gamma_r)

    def to_dict(self) -> dict:
        return {
            "Q": self.Q.tolist(),
            "A_m": self.A_m.tolist(),
            "B": self.B.tolist(),
            "sgn_Lambda": self.sgn_Lambda.tolist(),
            "eps_max": self.eps_max,
            "gain_ode_step": self.gain_ode_step,
            "gamma_y": self.gamma_y,
            "gamma_r": self.gamma_r,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ControllerConfig":
        d = dict(d)
        if "Q_diag" in d:
            d["Q"] = np.diag(d.pop("Q_diag"))
        return cls(**d)


def control_law(gains: GainSet, y, r, f_hat, clamp: bool = True) -> np.ndarray:
    u = gains.K_y.T @ np.asarray(y, dtype=float) + gains.K_r.T @ np.asarray(r, dtype=float) + np.asarray(f_hat, dtype=float)
    return np.clip(u, 0.0, 1.0) if clamp else u


def tracking_error(y, y_m) -> np.ndarray:
    return np.asarray(y, dtype=float) - np.asarray(y_m, dtype=float)


def gain_derivatives(cfg: ControllerConfig, gains: GainSet, e, y, r) -> tuple[np.ndarray, np.ndarray]:
    row = np.asarray(e, dtype=float) @ cfg.PBsgn  # e^T P B sgn(Lambda), length 6
    dK_y = -gains.Gamma_y @ np.outer(y, row)
    dK_r = -gains.Gamma_r @ np.outer(r, row)
    return dK_y, dK_r


def update_gains(cfg: ControllerConfig, gains: GainSet, e, y, r, dt: float) -> GainSet:
    """Integrate the adaptation laws over ``dt`` with e, y, r held (zero-order hold)."""
    h = cfg.gain_ode_step
    n = int(round(dt / h))
    if n < 1 or abs(n * h - dt) > 1e-9:
        raise ValueError(f"dt={dt} is not a positive multiple of gain_ode_step={h}")
    dK_y, dK_r = gain_derivatives(cfg, gains, e, y, r)
    field_ = np.concatenate([dK_y.ravel(), dK_r.ravel()])

    def rhs(t, k):
        return field_

    k = np.concatenate([gains.K_y.ravel(), gains.K_r.ravel()])
    for i in range(n):
        k = dp5_step(rhs, i * h, k, h).state_next
    return replace(gains, K_y=k[:18].reshape(3, 6), K_r=k[18:].reshape(6, 6), ode_steps=gains.ode_steps + n)


def ideal_gains(A, B, Lambda, A_m, B_m) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-norm least-squares solutions of the model matching conditions.

    ``A + B Lambda K_y^T = A_m`` and ``B Lambda K_r^T = B_m``.
    """
    BL_pinv = np.linalg.pinv(np.asarray(B, dtype=float) @ np.asarray(Lambda, dtype=float))
    K_y = (BL_pinv @ (np.asarray(A_m, dtype=float) - np.asarray(A, dtype=float))).T
    K_r = (BL_pinv @ np.asarray(B_m, dtype=float)).T
    return K_y, K_r


def lyapunov_value(cfg: ControllerConfig, e, Ktilde_y, Ktilde_r, Lambda_abs, Gamma_y=None, Gamma_r=None) -> float:
    """``e^T P e + tr(Kt_y^T Gy^-1 Kt_y |L|) + tr(Kt_r^T Gr^-1 Kt_r |L|)``."""
    e = np.asarray(e, dtype=float)
    Gamma_y = cfg.gamma_y * np.eye(3) if Gamma_y is None else np.asarray(Gamma_y, dtype=float)
    Gamma_r = cfg.gamma_r * np.eye(6) if Gamma_r is None else np.asarray(Gamma_r, dtype=float)
    Lambda_abs = np.asarray(Lambda_abs, dtype=float)
    Kty = np.asarray(Ktilde_y, dtype=float)
    Ktr = np.asarray(Ktilde_r, dtype=float)
    v = float(e @ cfg.P @ e)
    v += float(np.trace(Kty.T @ np.linalg.solve(Gamma_y, Kty) @ Lambda_abs))
    v += float(np.trace(Ktr.T @ np.linalg.solve(Gamma_r, Ktr) @ Lambda_abs))
    return v


def trace_identity_residual(cfg: ControllerConfig, gains: GainSet, Ktilde_y, e, y, r) -> float:
    """``tr(Kt_y^T (Gy^-1 dK_y + y e^T P B sgn(L)))``; zero when the adaptation law is exact."""
    dK_y, _ = gain_derivatives(cfg, gains, e, y, r)
    inner = np.linalg.solve(gains.Gamma_y, dK_y) + np.outer(y, np.asarray(e, dtype=float) @ cfg.PBsgn)
    return float(np.trace(np.asarray(Ktilde_y, dtype=float).T @ inner))


def ultimate_bound(cfg: ControllerConfig, Lambda) -> float:
    """Radius ``2 ||P B|| lambda_max(Lambda) eps_max / lambda_min(Q)`` of the residual error ball."""
    Lambda = np.asarray(Lambda, dtype=float)
    pb = np.linalg.norm(cfg.P @ cfg.B, 2)
    lam_high = float(np.max(np.abs(np.linalg.eigvals(Lambda))))
    lam_low = float(np.min(np.linalg.eigvalsh(cfg.Q)))
    return 2.0 * pb * lam_high * cfg.eps_max / lam_low
