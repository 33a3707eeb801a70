"""Exponentially stable reference model ``dy_m/dt = A_m y_m + B_m r``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NonDiagonal
from .plant import PAIRING

# r (6 valve channels) -> pose; with B_m = -A_m M the DC gain from desired pose to y_m is one
POSE_FROM_R = 0.5 * PAIRING

SETTLING_TIME = 5.0


def default_Am() -> np.ndarray:
    return np.diag([-1334.0 / 1705.0] * 3)


def encode_reference(pose) -> np.ndarray:
    """Duplicate a desired pose ``(z*, theta*, phi*)`` onto the six valve channels."""
    return np.repeat(np.asarray(pose, dtype=float).reshape(3), 2)


def decode_reference(r) -> np.ndarray:
    return POSE_FROM_R @ np.asarray(r, dtype=float)


@dataclass
class RefModel:
    A_m: np.ndarray = field(default_factory=default_Am)
    B_m: np.ndarray | None = None
    y_m: np.ndarray = field(default_factory=lambda: np.zeros(3))
    t: float = 0.0

    def __post_init__(self):
        self.A_m = np.asarray(self.A_m, dtype=float)
        if np.any(np.diag(self.A_m) >= 0):
            raise ValueError("A_m diagonal must be strictly negative")
        if self.B_m is None:
            self.B_m = -self.A_m @ POSE_FROM_R
        self.B_m = np.asarray(self.B_m, dtype=float)
        self.y_m = np.asarray(self.y_m, dtype=float)


def ref_derivative(model: RefModel, r, y_m=None) -> np.ndarray:
    y_m = model.y_m if y_m is None else np.asarray(y_m, dtype=float)
    return model.A_m @ y_m + model.B_m @ np.asarray(r, dtype=float)


def forced_response(model: RefModel, y0, r, t: float) -> np.ndarray:
    """Closed-form response at time ``t`` for constant ``r`` and diagonal ``A_m``."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    A_m = model.A_m
    if np.max(np.abs(A_m - np.diag(np.diag(A_m)))) > 1e-12:
        raise NonDiagonal("closed-form response needs a diagonal A_m")
    a = np.diag(A_m)
    y0 = np.asarray(y0, dtype=float)
    decay = np.exp(a * t)
    # steady state -A_m^{-1} B_m r; equals M r for the default B_m
    y_ss = -(model.B_m @ np.asarray(r, dtype=float)) / a
    return decay * y0 + (1.0 - decay) * y_ss


def advance(model: RefModel, r, dt: float) -> RefModel:
    return RefModel(A_m=model.A_m, B_m=model.B_m, y_m=forced_response(model, model.y_m, r, dt), t=model.t + dt)
