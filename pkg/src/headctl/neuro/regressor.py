"""Lagged input/output regression vectors."""

from __future__ import annotations

from collections import deque
from typing import Sequence

import numpy as np

from ..errors import InsufficientHistory

N_Y_LAGS = 5
N_U_LAGS = 6
REGRESSOR_DIM = N_Y_LAGS * 3 + N_U_LAGS * 6  # 51


class History:
    """Bounded buffer of ``(y, u)`` samples, oldest first.

    The last entry is sample ``k``; its ``u`` may be ``None`` when the
    command for the current tick has not been computed yet (only lags
    ``>= d >= 1`` are ever read).
    """

    def __init__(self, maxlen: int = 64):
        self._buf: deque = deque(maxlen=maxlen)

    def append(self, y, u=None) -> None:
        self._buf.append((np.asarray(y, dtype=float), None if u is None else np.asarray(u, dtype=float)))

    def set_last_u(self, u) -> None:
        y, _ = self._buf[-1]
        self._buf[-1] = (y, np.asarray(u, dtype=float))

    def __len__(self) -> int:
        return len(self._buf)

    def __getitem__(self, i):
        return self._buf[i]


def build_regressor(history: Sequence, d: int = 1) -> np.ndarray:
    """``(y(k-d) .. y(k-d-4), u(k-d) .. u(k-d-5))`` flattened, outputs first."""
    if d < 1:
        raise ValueError("delay d must be >= 1")
    if len(history) < d + N_U_LAGS:
        raise InsufficientHistory(f"need {d + N_U_LAGS} samples, have {len(history)}")
    ys = [history[-1 - d - j][0] for j in range(N_Y_LAGS)]
    us = [history[-1 - d - j][1] for j in range(N_U_LAGS)]
    return np.concatenate(ys + us)


def regressor_matrix(Y: np.ndarray, U: np.ndarray, d: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Regressors for every sample of a recorded trajectory.

    Returns ``(Phi, idx)`` where ``Phi[j]`` is the regressor at sample ``idx[j]``.
    """
    Y = np.asarray(Y, dtype=float)
    U = np.asarray(U, dtype=float)
    first = d + N_U_LAGS - 1
    idx = np.arange(first, len(Y))
    cols = [Y[idx - d - j] for j in range(N_Y_LAGS)] + [U[idx - d - j] for j in range(N_U_LAGS)]
    return np.hstack(cols), idx
