"""Persistently exciting open-loop duty-cycle signals."""

from __future__ import annotations

import numpy as np

# incommensurate base frequencies spanning 0.05-2 Hz (ratios are not rational)
BASE_FREQS_HZ = np.array([0.05, 0.05 * np.sqrt(5), 0.05 * np.pi * 1.1, 0.35 * np.sqrt(2), 0.9 * np.e / 2, 2.0 / np.sqrt(1.1)])

DEFAULT_LEVEL = np.array([0.35, 0.35, 0.2, 0.2, 0.45, 0.45])
DEFAULT_AMPLITUDE = np.array([0.3, 0.3, 0.12, 0.12, 0.1, 0.1])


def generate_excitation(duration: float, seed: int, dt: float = 0.1, level=None, amplitude=None,
                        dither: float = 0.1) -> np.ndarray:
    """Sum-of-sinusoids plus uniform dither per channel, clamped to [0, 1].

    Each channel uses all six base frequencies, jittered by up to 3% and
    phase-shifted from ``seed``, scaled so the sinusoids span ``level +- amplitude``.
    ``dither`` is the uniform noise half-width as a fraction of ``amplitude``.
    Returns an array of shape ``(round(duration / dt), 6)``.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    level = DEFAULT_LEVEL if level is None else np.broadcast_to(np.asarray(level, dtype=float), (6,))
    amplitude = DEFAULT_AMPLITUDE if amplitude is None else np.broadcast_to(np.asarray(amplitude, dtype=float), (6,))
    rng = np.random.default_rng(seed)
    n = int(round(duration / dt))
    t = np.arange(n) * dt
    u = np.empty((n, 6))
    for ch in range(6):
        freqs = BASE_FREQS_HZ * (1.0 + 0.03 * rng.uniform(-1.0, 1.0, BASE_FREQS_HZ.size))
        phases = rng.uniform(0.0, 2 * np.pi, BASE_FREQS_HZ.size)
        wave = np.sin(2 * np.pi * freqs[None, :] * t[:, None] + phases[None, :]).sum(axis=1)
        wave /= BASE_FREQS_HZ.size
        noise = rng.uniform(-dither, dither, n)
        u[:, ch] = level[ch] + amplitude[ch] * (2.0 * wave + noise)
    return np.clip(u, 0.0, 1.0)
