"""Stacked LSTM with a fully connected head, forward pass and backpropagation through time.

Gate layout inside each ``W`` (shape ``4H x (n_in + H)``) is ``[input, forget, cell, output]``.
Dropout is applied to each hidden layer's output (not to the recurrent path).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DimensionMismatch, LengthMismatch

CHECKPOINT_VERSION = 1


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class LstmParams:
    input_dim: int
    hidden: tuple[int, ...]
    output_dim: int
    tensors: dict[str, np.ndarray]
    input_offset: np.ndarray = None
    input_scale: np.ndarray = None

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.input_offset is None:
            self.input_offset = np.zeros(self.input_dim)
        if self.input_scale is None:
            self.input_scale = np.ones(self.input_dim)
        self.input_offset = np.asarray(self.input_offset, dtype=float)
        self.input_scale = np.asarray(self.input_scale, dtype=float)
        for name, shape in self.shapes().items():
            if self.tensors[name].shape != shape:
                raise DimensionMismatch(f"{name}: expected {shape}, got {self.tensors[name].shape}")

    def shapes(self) -> dict[str, tuple[int, ...]]:
        out = {}
        n_in = self.input_dim
        for l, h in enumerate(self.hidden):
            out[f"l{l}.W"] = (4 * h, n_in + h)
            out[f"l{l}.b"] = (4 * h,)
            n_in = h
        out["fc.W"] = (self.output_dim, n_in)
        out["fc.b"] = (self.output_dim,)
        return out

    @property
    def n_params(self) -> int:
        return int(sum(t.size for t in self.tensors.values()))

    def copy(self) -> "LstmParams":
        return LstmParams(self.input_dim, self.hidden, self.output_dim,
                          {k: v.copy() for k, v in self.tensors.items()},
                          self.input_offset.copy(), self.input_scale.copy())

    @classmethod
    def init(cls, input_dim: int = 51, hidden=(9, 6, 6), output_dim: int = 6, seed: int = 0,
             input_offset=None, input_scale=None) -> "LstmParams":
        """Zero-mean unit-variance normal weights scaled by ``1/sqrt(fan_in)``; zero biases."""
        rng = np.random.default_rng(seed)
        tensors = {}
        n_in = input_dim
        for l, h in enumerate(hidden):
            fan_in = n_in + h
            tensors[f"l{l}.W"] = rng.standard_normal((4 * h, fan_in)) / np.sqrt(fan_in)
            tensors[f"l{l}.b"] = np.zeros(4 * h)
            n_in = h
        tensors["fc.W"] = rng.standard_normal((output_dim, n_in)) / np.sqrt(n_in)
        tensors["fc.b"] = np.zeros(output_dim)
        return cls(input_dim, tuple(hidden), output_dim, tensors, input_offset, input_scale)

    @classmethod
    def zeros_like(cls, p: "LstmParams") -> "LstmParams":
        return cls(p.input_dim, p.hidden, p.output_dim,
                   {k: np.zeros_like(v) for k, v in p.tensors.items()},
                   p.input_offset.copy(), p.input_scale.copy())

    def zero_state(self, batch: int | None = None) -> list[tuple[np.ndarray, np.ndarray]]:
        shape = (lambda h: (h,)) if batch is None else (lambda h: (batch, h))
        return [(np.zeros(shape(h)), np.zeros(shape(h))) for h in self.hidden]

    def normalize(self, phi):
        phi = np.asarray(phi)
        if phi.dtype.kind != "f":
            phi = phi.astype(float)
        return (phi - self.input_offset) / self.input_scale

    # checkpoint I/O ---------------------------------------------------------

    def save(self, path) -> None:
        meta = {
            "format_version": CHECKPOINT_VERSION,
            "input_dim": self.input_dim,
            "hidden": list(self.hidden),
            "output_dim": self.output_dim,
            "shapes": {k: list(v.shape) for k, v in self.tensors.items()},
        }
        arrays = {f"t/{k}": v for k, v in self.tensors.items()}
        arrays["input_offset"] = self.input_offset
        arrays["input_scale"] = self.input_scale
        with open(path, "wb") as fh:
            np.savez(fh, __meta__=np.array(json.dumps(meta)), **arrays)

    @classmethod
    def load(cls, path) -> "LstmParams":
        with np.load(Path(path), allow_pickle=False) as z:
            meta = json.loads(str(z["__meta__"]))
            if meta.get("format_version") != CHECKPOINT_VERSION:
                raise ValueError(f"unsupported checkpoint version {meta.get('format_version')}")
            tensors = {k[2:]: z[k].copy() for k in z.files if k.startswith("t/")}
            for k, shape in meta["shapes"].items():
                if list(tensors[k].shape) != shape:
                    raise DimensionMismatch(f"{k}: stored shape {shape} vs data {tensors[k].shape}")
            return cls(meta["input_dim"], tuple(meta["hidden"]), meta["output_dim"], tensors,
                       z["input_offset"].copy(), z["input_scale"].copy())


def dropout_masks(params: LstmParams, rng: np.random.Generator, rate: float, batch: int | None = None):
    keep = 1.0 - rate
    shape = (lambda h: (h,)) if batch is None else (lambda h: (batch, h))
    return [(rng.random(shape(h)) < keep) / keep for h in params.hidden]


def lstm_forward(params: LstmParams, phi, state=None, dropout_mask=None):
    """One time step. ``phi`` is the raw (un-normalised) regressor, shape ``(51,)`` or ``(B, 51)``.

    Returns ``(f_hat, new_state)``.
    """
    phi = np.asarray(phi)
    if phi.shape[-1] != params.input_dim:
        raise DimensionMismatch(f"regressor has {phi.shape[-1]} entries, expected {params.input_dim}")
    x = params.normalize(phi)
    batch = None if x.ndim == 1 else x.shape[0]
    if state is None:
        state = params.zero_state(batch)
    if len(state) != len(params.hidden):
        raise DimensionMismatch("state must hold one (h, c) pair per layer")
    new_state = []
    for l, H in enumerate(params.hidden):
        h_prev, c_prev = state[l]
        if h_prev.shape[-1] != H or c_prev.shape[-1] != H:
            raise DimensionMismatch(f"layer {l} state must have width {H}")
        z = np.concatenate([x, h_prev], axis=-1) @ params.tensors[f"l{l}.W"].T + params.tensors[f"l{l}.b"]
        i = _sigmoid(z[..., :H])
        f = _sigmoid(z[..., H:2 * H])
        g = np.tanh(z[..., 2 * H:3 * H])
        o = _sigmoid(z[..., 3 * H:])
        c = f * c_prev + i * g
        h = o * np.tanh(c)
        new_state.append((h, c))
        x = h if dropout_mask is None else h * dropout_mask[l]
    y = x @ params.tensors["fc.W"].T + params.tensors["fc.b"]
    return y, new_state


def forward_sequence(params: LstmParams, X, masks=None):
    """Run a batch of sequences ``X`` of shape ``(T, B, n_in)`` from a zero state.

    Returns ``(Y_hat, cache)`` with ``Y_hat`` of shape ``(T, B, out)``.
    """
    X = params.normalize(X)
    T, B, _ = X.shape
    L = len(params.hidden)
    cache = {"x": [[None] * T for _ in range(L + 1)], "gates": [[None] * T for _ in range(L)],
             "c": [[None] * (T + 1) for _ in range(L)], "h": [[None] * (T + 1) for _ in range(L)],
             "masks": masks}
    for l, H in enumerate(params.hidden):
        cache["h"][l][0] = np.zeros((B, H))
        cache["c"][l][0] = np.zeros((B, H))
    for t in range(T):
        x = X[t]
        for l, H in enumerate(params.hidden):
            cache["x"][l][t] = x
            h_prev = cache["h"][l][t]
            c_prev = cache["c"][l][t]
            z = np.concatenate([x, h_prev], axis=1) @ params.tensors[f"l{l}.W"].T + params.tensors[f"l{l}.b"]
            i = _sigmoid(z[:, :H])
            f = _sigmoid(z[:, H:2 * H])
            g = np.tanh(z[:, 2 * H:3 * H])
            o = _sigmoid(z[:, 3 * H:])
            c = f * c_prev + i * g
            h = o * np.tanh(c)
            cache["gates"][l][t] = (i, f, g, o)
            cache["c"][l][t + 1] = c
            cache["h"][l][t + 1] = h
            x = h if masks is None else h * masks[l]
        cache["x"][L][t] = x
    top = np.stack(cache["x"][L])
    Y = top @ params.tensors["fc.W"].T + params.tensors["fc.b"]
    return Y, cache


def mse_loss(pred, target):
    """Sum over time steps and outputs of ``0.5 (pred - target)^2``."""
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise LengthMismatch(f"prediction shape {pred.shape} != target shape {target.shape}")
    # kept as a numpy scalar so extended-precision inputs stay extended
    return 0.5 * np.sum((pred - target) ** 2)


def batch_loss(params: LstmParams, X, Yt, masks=None) -> float:
    """Per-sequence loss averaged over the batch; ``X`` is ``(T, B, n_in)``."""
    Y, _ = forward_sequence(params, X, masks)
    return mse_loss(Y, Yt) / X.shape[1]


def backprop_bptt(params: LstmParams, X, Yt, masks=None) -> tuple[LstmParams, float]:
    """Exact gradient of :func:`batch_loss` by reverse-mode accumulation through time.

    ``masks`` (one per layer, shape ``(B, H)``) stay fixed across the sequence.
    Returns ``(grads, loss)``.
    """
    X = np.asarray(X, dtype=float)
    Yt = np.asarray(Yt, dtype=float)
    if X.ndim != 3 or X.shape[1] == 0:
        raise ValueError("batch must be a nonempty (T, B, n_in) array")
    Y, cache = forward_sequence(params, X, masks)
    T, B, _ = X.shape
    L = len(params.hidden)
    grads = LstmParams.zeros_like(params)
    g = grads.tensors

    dY = (Y - Yt) / B
    loss = 0.5 * float(np.sum((Y - Yt) ** 2)) / B
    top = np.stack(cache["x"][L])
    g["fc.W"] += np.einsum("tbo,tbh->oh", dY, top)
    g["fc.b"] += dY.sum(axis=(0, 1))
    d_out = dY @ params.tensors["fc.W"]  # (T, B, H_last), gradient wrt masked output of top layer

    for l in reversed(range(L)):
        H = params.hidden[l]
        W = params.tensors[f"l{l}.W"]
        n_in = W.shape[1] - H
        if masks is not None:
            d_out = d_out * masks[l]
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        dx = np.zeros((T, B, n_in))
        dW = g[f"l{l}.W"]
        db = g[f"l{l}.b"]
        for t in reversed(range(T)):
            i, f, gg, o = cache["gates"][l][t]
            c = cache["c"][l][t + 1]
            c_prev = cache["c"][l][t]
            h_prev = cache["h"][l][t]
            tc = np.tanh(c)
            dh = d_out[t] + dh_next
            dc = dc_next + dh * o * (1.0 - tc * tc)
            dz = np.concatenate([
                dc * gg * i * (1.0 - i),
                dc * c_prev * f * (1.0 - f),
                dc * i * (1.0 - gg * gg),
                dh * tc * o * (1.0 - o),
            ], axis=1)
            inp = np.concatenate([cache["x"][l][t], h_prev], axis=1)
            dW += dz.T @ inp
            db += dz.sum(axis=0)
            dinp = dz @ W
            dx[t] = dinp[:, :n_in]
            dh_next = dinp[:, n_in:]
            dc_next = dc * f
        d_out = dx
    return grads, loss


def sgd_step(params: LstmParams, grads: LstmParams, cfg) -> LstmParams:
    """``w <- eta * w - alpha * grad`` on every tensor (``cfg.eta``, ``cfg.learning_rate``)."""
    new = params.copy()
    for k, v in new.tensors.items():
        v *= cfg.eta
        v -= cfg.learning_rate * grads.tensors[k]
    return new
