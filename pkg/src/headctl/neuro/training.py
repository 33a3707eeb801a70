"""Mini-batch SGD training of the LSTM approximator on recorded plant data."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from ..errors import Empty
from .lstm import LstmParams, backprop_bptt, dropout_masks, forward_sequence, lstm_forward, sgd_step
from .regressor import REGRESSOR_DIM, regressor_matrix

TARGET_MODES = ("f_true", "next_output")


@dataclass
class TrainConfig:
    learning_rate: float = 5e-3
    eta: float = 1.0
    batch_size: int = 50
    epochs: int = 200
    seed: int = 0
    dropout_rate: float = 0.3
    seq_len: int = 8
    hidden: tuple = (9, 6, 6)
    d: int = 1
    target: str = "f_true"
    val_fraction: float = 0.2

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if self.seq_len < 1:
            raise ValueError("seq_len must be >= 1")
        if self.target not in TARGET_MODES:
            raise ValueError(f"target must be one of {TARGET_MODES}")
        if not 0.0 < self.val_fraction < 1.0:
            raise ValueError("val_fraction must lie in (0, 1)")
        self.hidden = tuple(int(h) for h in self.hidden)

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        return cls(**d)


@dataclass
class Dataset:
    """Regressors ``Phi`` (N x 51) and aligned targets (N x 6), in time order."""

    Phi: np.ndarray
    target: np.ndarray

    def __len__(self) -> int:
        return len(self.Phi)


def make_dataset(Y, U, F, d: int = 1, target: str = "f_true") -> Dataset:
    """Build the supervised set from a trajectory ``(y_k, u_k, f(y_k))``.

    ``f_true`` targets ``f(y(k))``; ``next_output`` targets the one-step
    increment ``y(k) - y(k-1)`` padded with zeros to six outputs.
    """
    Y = np.asarray(Y, dtype=float)
    U = np.asarray(U, dtype=float)
    Phi, idx = regressor_matrix(Y, U, d)
    if target == "f_true":
        T = np.asarray(F, dtype=float)[idx]
    elif target == "next_output":
        T = np.zeros((len(idx), 6))
        T[:, :3] = Y[idx] - Y[idx - 1]
    else:
        raise ValueError(f"unknown target mode {target!r}")
    return Dataset(Phi, T)


def sequence_windows(n: int, seq_len: int, start: int = 0) -> np.ndarray:
    """End indices of every full window ``[end - seq_len + 1, end]`` inside ``[start, n)``."""
    return np.arange(start + seq_len - 1, n)


def gather(ds: Dataset, ends: np.ndarray, seq_len: int) -> tuple[np.ndarray, np.ndarray]:
    """Stack windows into ``(T, B, 51)`` inputs and ``(T, B, 6)`` targets."""
    steps = ends[None, :] - np.arange(seq_len - 1, -1, -1)[:, None]
    return ds.Phi[steps], ds.target[steps]


@dataclass
class TrainReport:
    n_params: int
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    n_batches: int = 0

    @property
    def val_reduction(self) -> float:
        """Fractional reduction of held-out loss from before training to the end."""
        return 1.0 - self.val_loss[-1] / self.val_loss[0]

    def to_dict(self) -> dict:
        return {"n_params": self.n_params, "n_batches": self.n_batches,
                "train_loss": self.train_loss, "val_loss": self.val_loss}


def split(ds: Dataset, val_fraction: float) -> tuple[Dataset, Dataset]:
    """Contiguous split: the last ``val_fraction`` of samples is held out."""
    cut = int(round(len(ds) * (1.0 - val_fraction)))
    return Dataset(ds.Phi[:cut], ds.target[:cut]), Dataset(ds.Phi[cut:], ds.target[cut:])


def evaluate(params: LstmParams, ds: Dataset, seq_len: int, chunk: int = 500) -> float:
    """Mean per-window loss (last-step output only) over every window of ``ds``."""
    ends = sequence_windows(len(ds), seq_len)
    total = 0.0
    for i in range(0, len(ends), chunk):
        X, Yt = gather(ds, ends[i:i + chunk], seq_len)
        Y, _ = forward_sequence(params, X)
        total += 0.5 * float(np.sum((Y[-1] - Yt[-1]) ** 2))
    return total / len(ends)


def train(ds: Dataset, cfg: TrainConfig, params: LstmParams | None = None) -> tuple[LstmParams, TrainReport]:
    """Shuffled mini-batch SGD with per-sequence dropout masks.

    The loss of each window sums over all of its time steps; the reported
    losses score only the last step, which is what online inference uses.
    """
    if len(ds) == 0:
        raise Empty("empty dataset")
    train_ds, val_ds = split(ds, cfg.val_fraction)
    ends = sequence_windows(len(train_ds), cfg.seq_len)
    n_batches = len(ends) // cfg.batch_size
    if n_batches < 10:
        raise ValueError(f"dataset yields {n_batches} batches; at least 10 are required")
    if len(val_ds) < cfg.seq_len:
        raise ValueError("held-out split shorter than one sequence")
    if params is None:
        offset = train_ds.Phi.mean(axis=0)
        scale = train_ds.Phi.std(axis=0)
        scale[scale < 1e-9] = 1.0
        params = LstmParams.init(REGRESSOR_DIM, cfg.hidden, ds.target.shape[1], cfg.seed, offset, scale)
    rng = np.random.default_rng(cfg.seed)
    report = TrainReport(n_params=params.n_params, n_batches=n_batches)
    report.val_loss.append(evaluate(params, val_ds, cfg.seq_len))
    for _ in range(cfg.epochs):
        order = rng.permutation(ends)
        epoch_loss = 0.0
        for b in range(n_batches):
            X, Yt = gather(train_ds, order[b * cfg.batch_size:(b + 1) * cfg.batch_size], cfg.seq_len)
            masks = dropout_masks(params, rng, cfg.dropout_rate, cfg.batch_size) if cfg.dropout_rate > 0 else None
            grads, loss = backprop_bptt(params, X, Yt, masks)
            params = sgd_step(params, grads, cfg)
            epoch_loss += loss
        report.train_loss.append(epoch_loss / n_batches)
        report.val_loss.append(evaluate(params, val_ds, cfg.seq_len))
    return params, report


def predict_windows(params: LstmParams, Phi: np.ndarray, seq_len: int, chunk: int = 500) -> np.ndarray:
    """Last-step prediction for each full window; row ``j`` predicts sample ``j + seq_len - 1``."""
    ds = Dataset(np.asarray(Phi, dtype=float), np.zeros((len(Phi), params.output_dim)))
    ends = sequence_windows(len(ds), seq_len)
    out = []
    for i in range(0, len(ends), chunk):
        X, _ = gather(ds, ends[i:i + chunk], seq_len)
        Y, _ = forward_sequence(params, X)
        out.append(Y[-1])
    return np.concatenate(out) if out else np.zeros((0, params.output_dim))


def approximation_error(params: LstmParams, Phi, F, seq_len: int, n_points: int = 500) -> float:
    """``max ||f_hat - f||_2`` over ``n_points`` evenly spaced held-out windows."""
    pred = predict_windows(params, Phi, seq_len)
    F = np.asarray(F, dtype=float)[seq_len - 1:]
    pick = np.unique(np.linspace(0, len(pred) - 1, min(n_points, len(pred))).astype(int))
    return float(np.max(np.linalg.norm(pred[pick] - F[pick], axis=1)))


class WindowPredictor:
    """Online inference matching training: each call replays the last ``seq_len`` regressors from a zero state.

    With ``mc_dropout`` set, a fresh dropout mask is drawn per call (Monte-Carlo sampling).
    """

    def __init__(self, params: LstmParams, seq_len: int, mc_dropout: float = 0.0, seed: int = 0):
        self.params = params
        self.seq_len = seq_len
        self.mc_dropout = mc_dropout
        self._rng = np.random.default_rng(seed)
        self._buf: deque = deque(maxlen=seq_len)

    def __call__(self, phi) -> np.ndarray:
        self._buf.append(np.asarray(phi, dtype=float))
        mask = dropout_masks(self.params, self._rng, self.mc_dropout) if self.mc_dropout > 0 else None
        state = None
        for x in self._buf:
            y, state = lstm_forward(self.params, x, state, mask)
        return y
