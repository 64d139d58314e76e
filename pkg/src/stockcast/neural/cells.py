"""Recurrent cells, dropout and the dense head, each with an explicit backward pass.

Batched arrays are laid out ``[batch, time, features]``; weights multiply from
the right (``x @ Wx``) so ``Wx`` is ``[in, hidden]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError, NumericError, ShapeError

GATES = ("i", "f", "g", "o")


def sigmoid(z):
    # split by sign so neither branch overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class RnnCellParams:
    Wx: np.ndarray  # [in, hidden]
    Wh: np.ndarray  # [hidden, hidden]
    b: np.ndarray  # [hidden]

    def __post_init__(self):
        h = self.b.shape[0]
        if self.Wx.ndim != 2 or self.Wx.shape[1] != h or self.Wh.shape != (h, h) or self.b.ndim != 1:
            raise ShapeError(f"inconsistent RNN shapes Wx{self.Wx.shape} Wh{self.Wh.shape} b{self.b.shape}")

    @property
    def hidden(self) -> int:
        return self.b.shape[0]


@dataclass(frozen=True)
class LstmCellParams:
    """Gate blocks are stored side by side in the order i, f, g, o."""

    Wx: np.ndarray  # [in, 4*hidden]
    Wh: np.ndarray  # [hidden, 4*hidden]
    b: np.ndarray  # [4*hidden]

    def __post_init__(self):
        if self.b.ndim != 1 or self.b.shape[0] % 4:
            raise ShapeError(f"LSTM bias length must be a multiple of 4, got {self.b.shape}")
        h = self.b.shape[0] // 4
        if self.Wx.ndim != 2 or self.Wx.shape[1] != 4 * h or self.Wh.shape != (h, 4 * h):
            raise ShapeError(f"inconsistent LSTM shapes Wx{self.Wx.shape} Wh{self.Wh.shape} b{self.b.shape}")

    @property
    def hidden(self) -> int:
        return self.b.shape[0] // 4

    def gate(self, name: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(Wx, Wh, b)`` views for one gate."""
        k, h = GATES.index(name), self.hidden
        sl = slice(k * h, (k + 1) * h)
        return self.Wx[:, sl], self.Wh[:, sl], self.b[sl]


def _batch(X, n_in):
    X = np.asarray(X, dtype=float)
    single = X.ndim == 2
    if single:
        X = X[None]
    if X.ndim != 3 or X.shape[2] != n_in:
        raise ShapeError(f"expected input [batch, time, {n_in}], got {np.shape(X)}")
    if X.shape[1] < 1:
        raise ShapeError("sequence must have at least one step")
    return X, single


def _state(s, batch, hidden):
    if s is None:
        return np.zeros((batch, hidden))
    s = np.broadcast_to(np.asarray(s, dtype=float), (batch, hidden))
    return np.array(s)


def _finite(a, what):
    if not np.all(np.isfinite(a)):
        raise NumericError(f"non-finite {what} activation")


def rnn_forward_train(p: RnnCellParams, X, h0=None):
    """All hidden states ``[batch, time, hidden]`` and a cache for ``rnn_backward``."""
    X, _ = _batch(X, p.Wx.shape[0])
    B, T, _ = X.shape
    h = _state(h0, B, p.hidden)
    hs = np.empty((B, T + 1, p.hidden))
    hs[:, 0] = h
    for t in range(T):
        h = np.tanh(X[:, t] @ p.Wx + h @ p.Wh + p.b)
        hs[:, t + 1] = h
    _finite(hs, "RNN")
    return hs[:, 1:], (X, hs)


def rnn_forward(p: RnnCellParams, X, h0=None, return_sequences: bool = True):
    """``h_t = tanh(x_t Wx + h_{t-1} Wh + b)``; all steps or only the last."""
    single = np.ndim(X) == 2
    out, _ = rnn_forward_train(p, X, h0)
    out = out if return_sequences else out[:, -1]
    return out[0] if single else out


def rnn_backward(p: RnnCellParams, cache, dH):
    """Gradients ``(RnnCellParams, dX)`` given the loss gradient for every hidden output."""
    X, hs = cache
    B, T, _ = X.shape
    dWx, dWh, db = np.zeros_like(p.Wx), np.zeros_like(p.Wh), np.zeros_like(p.b)
    dX = np.empty_like(X)
    dh_next = np.zeros((B, p.hidden))
    for t in range(T - 1, -1, -1):
        da = (dH[:, t] + dh_next) * (1.0 - hs[:, t + 1] ** 2)
        dWx += X[:, t].T @ da
        dWh += hs[:, t].T @ da
        db += da.sum(axis=0)
        dX[:, t] = da @ p.Wx.T
        dh_next = da @ p.Wh.T
    return RnnCellParams(dWx, dWh, db), dX


def lstm_forward_train(p: LstmCellParams, X, state=None):
    X, _ = _batch(X, p.Wx.shape[0])
    B, T, _ = X.shape
    H = p.hidden
    h0, c0 = (None, None) if state is None else state
    h, c = _state(h0, B, H), _state(c0, B, H)
    hs = np.empty((B, T + 1, H))
    cs = np.empty((B, T + 1, H))
    gates = np.empty((B, T, 4 * H))
    hs[:, 0], cs[:, 0] = h, c
    for t in range(T):
        z = X[:, t] @ p.Wx + h @ p.Wh + p.b
        a = np.empty_like(z)
        a[:, : 2 * H] = sigmoid(z[:, : 2 * H])
        a[:, 2 * H : 3 * H] = np.tanh(z[:, 2 * H : 3 * H])
        a[:, 3 * H :] = sigmoid(z[:, 3 * H :])
        i, f, g, o = a[:, :H], a[:, H : 2 * H], a[:, 2 * H : 3 * H], a[:, 3 * H :]
        c = f * c + i * g
        h = o * np.tanh(c)
        gates[:, t], hs[:, t + 1], cs[:, t + 1] = a, h, c
    _finite(hs, "LSTM")
    return hs[:, 1:], (X, hs, cs, gates)


def lstm_forward(p: LstmCellParams, X, state=None, return_sequences: bool = True):
    """Gates ``i, f, o = sigmoid``, ``g = tanh``; ``c_t = f c_{t-1} + i g``, ``h_t = o tanh(c_t)``."""
    single = np.ndim(X) == 2
    out, _ = lstm_forward_train(p, X, state)
    out = out if return_sequences else out[:, -1]
    return out[0] if single else out


def lstm_final_cell(p: LstmCellParams, X, state=None) -> np.ndarray:
    """Cell state after the last step (batched)."""
    _, (_, _, cs, _) = lstm_forward_train(p, X, state)
    return cs[:, -1]


def lstm_backward(p: LstmCellParams, cache, dH):
    X, hs, cs, gates = cache
    B, T, _ = X.shape
    H = p.hidden
    dWx, dWh, db = np.zeros_like(p.Wx), np.zeros_like(p.Wh), np.zeros_like(p.b)
    dX = np.empty_like(X)
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    dz = np.empty((B, 4 * H))
    for t in range(T - 1, -1, -1):
        a = gates[:, t]
        i, f, g, o = a[:, :H], a[:, H : 2 * H], a[:, 2 * H : 3 * H], a[:, 3 * H :]
        tc = np.tanh(cs[:, t + 1])
        dh = dH[:, t] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        dz[:, :H] = dc * g * i * (1.0 - i)
        dz[:, H : 2 * H] = dc * cs[:, t] * f * (1.0 - f)
        dz[:, 2 * H : 3 * H] = dc * i * (1.0 - g * g)
        dz[:, 3 * H :] = dh * tc * o * (1.0 - o)
        dWx += X[:, t].T @ dz
        dWh += hs[:, t].T @ dz
        db += dz.sum(axis=0)
        dX[:, t] = dz @ p.Wx.T
        dh_next = dz @ p.Wh.T
        dc_next = dc * f
    return LstmCellParams(dWx, dWh, db), dX


def dropout_forward(x, rate: float, mode: str = "train", rng: np.random.Generator | None = None):
    """Inverted dropout; returns ``(output, mask)`` where ``mask`` already holds the ``1/(1-rate)`` scale.

    Eval mode (or ``rate == 0``) is the identity with a ``None`` mask.
    """
    if not 0.0 <= rate < 1.0:
        raise InputError(f"dropout rate must be in [0, 1), got {rate}")
    if mode not in ("train", "eval"):
        raise InputError(f"mode must be 'train' or 'eval', got {mode!r}")
    x = np.asarray(x, dtype=float)
    if mode == "eval" or rate == 0.0:
        return x, None
    if rng is None:
        raise InputError("train-mode dropout needs an rng")
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


def dropout_backward(dout, mask):
    return dout if mask is None else dout * mask


def dense_forward(W, b, h):
    """Linear head ``h @ W + b``; ``W`` is ``[hidden, out]``."""
    W, b, h = (np.asarray(a, dtype=float) for a in (W, b, h))
    if W.ndim != 2 or h.shape[-1] != W.shape[0] or b.shape != (W.shape[1],):
        raise ShapeError(f"dense shapes W{W.shape} b{b.shape} h{h.shape} do not match")
    return h @ W + b


def dense_backward(W, h, dout):
    """``(dW, db, dh)`` for batched ``h`` ``[batch, hidden]`` and ``dout`` ``[batch, out]``."""
    return h.T @ dout, dout.sum(axis=0), dout @ W.T
