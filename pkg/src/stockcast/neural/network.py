"""Stacked recurrent forecaster, Adam, the training loop and parameter persistence."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..data import WindowedDataset
from ..errors import DivergenceError, InputError, ShapeError
from .cells import (
    LstmCellParams,
    RnnCellParams,
    dense_backward,
    dense_forward,
    dropout_backward,
    dropout_forward,
    lstm_backward,
    lstm_forward_train,
    rnn_backward,
    rnn_forward_train,
)

log = logging.getLogger(__name__)

KINDS = ("rnn", "lstm")
FORMAT_VERSION = 1


@dataclass(frozen=True)
class NetSpec:
    kind: str = "lstm"
    widths: tuple = (256, 128)
    dropout: float = 0.2
    window: int = 7
    n_features: int = 1
    n_out: int = 1

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if self.kind not in KINDS:
            raise InputError(f"cell kind must be one of {KINDS}, got {self.kind!r}")
        if not self.widths or min(self.widths) < 1:
            raise InputError(f"layer widths must be positive, got {self.widths}")
        if not 0.0 <= self.dropout < 1.0:
            raise InputError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.window < 1 or self.n_features < 1 or self.n_out < 1:
            raise InputError("window, n_features and n_out must be >= 1")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch: int = 64
    lr: float = 0.001
    seed: int = 0
    shuffle: bool = True
    clip_norm: float | None = 5.0

    def __post_init__(self):
        if self.epochs < 1 or self.batch < 1:
            raise InputError("epochs and batch must be >= 1")
        if not self.lr > 0:
            raise InputError("learning rate must be positive")


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_params(spec: NetSpec, rng: np.random.Generator) -> dict:
    """Glorot-uniform weights, zero biases, and LSTM forget-gate biases of 1."""
    params = {}
    n_in = spec.n_features
    gates = 4 if spec.kind == "lstm" else 1
    for k, h in enumerate(spec.widths, start=1):
        params[f"l{k}.Wx"] = glorot(rng, n_in, gates * h)
        params[f"l{k}.Wh"] = glorot(rng, h, gates * h)
        b = np.zeros(gates * h)
        if spec.kind == "lstm":
            b[h : 2 * h] = 1.0
        params[f"l{k}.b"] = b
        n_in = h
    params["dense.W"] = glorot(rng, n_in, spec.n_out)
    params["dense.b"] = np.zeros(spec.n_out)
    return params


def _cell(spec, params, k):
    cls = LstmCellParams if spec.kind == "lstm" else RnnCellParams
    return cls(params[f"l{k}.Wx"], params[f"l{k}.Wh"], params[f"l{k}.b"])


def _windows(spec: NetSpec, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 2 and spec.n_features == 1 and X.shape[1] == spec.window:
        X = X[:, :, None]
    if X.ndim != 3 or X.shape[1:] != (spec.window, spec.n_features):
        raise ShapeError(f"expected windows [n, {spec.window}, {spec.n_features}], got {np.shape(X)}")
    return X


def network_forward_train(spec: NetSpec, params: dict, X, mode: str = "train", rng=None):
    """Predictions ``[batch, n_out]`` and the cache for ``network_backward``.

    Every recurrent layer but the last hands its full hidden sequence on; the
    last hands only its final state to the dense head. Dropout follows each
    recurrent layer.
    """
    X = _windows(spec, X)
    forward = lstm_forward_train if spec.kind == "lstm" else rnn_forward_train
    caches, masks = [], []
    h = X
    n_layers = len(spec.widths)
    for k in range(1, n_layers + 1):
        seq, cache = forward(_cell(spec, params, k), h)
        caches.append(cache)
        h = seq if k < n_layers else seq[:, -1]
        h, mask = dropout_forward(h, spec.dropout, mode, rng)
        masks.append(mask)
    y = dense_forward(params["dense.W"], params["dense.b"], h)
    return y, (caches, masks, h)


def network_forward(spec: NetSpec, params: dict, window, mode: str = "eval", rng=None) -> float:
    """Scalar output for one window shaped ``[window]`` or ``[window, features]``."""
    X = np.asarray(window, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape != (spec.window, spec.n_features):
        raise ShapeError(f"expected a window of shape ({spec.window}, {spec.n_features}), got {X.shape}")
    y, _ = network_forward_train(spec, params, X[None], mode, rng)
    return float(y[0, 0])


def network_backward(spec: NetSpec, params: dict, cache, dy) -> dict:
    caches, masks, h_last = cache
    grads = {}
    dW, db, dh = dense_backward(params["dense.W"], h_last, dy)
    grads["dense.W"], grads["dense.b"] = dW, db
    backward = lstm_backward if spec.kind == "lstm" else rnn_backward
    n_layers = len(spec.widths)
    for k in range(n_layers, 0, -1):
        dh = dropout_backward(dh, masks[k - 1])
        X = caches[k - 1][0]
        if k == n_layers:
            dH = np.zeros((X.shape[0], X.shape[1], spec.widths[k - 1]))
            dH[:, -1] = dh
        else:
            dH = dh
        g, dh = backward(_cell(spec, params, k), caches[k - 1], dH)
        grads[f"l{k}.Wx"], grads[f"l{k}.Wh"], grads[f"l{k}.b"] = g.Wx, g.Wh, g.b
    return grads


def mse_loss(spec, params, X, y, mode="train", rng=None):
    """Mean squared error and its parameter gradients."""
    pred, cache = network_forward_train(spec, params, X, mode, rng)
    y = np.asarray(y, dtype=float).reshape(pred.shape)
    diff = pred - y
    with np.errstate(over="ignore", invalid="ignore"):
        loss = float(np.mean(diff * diff))  # overflow surfaces as a non-finite loss
    grads = network_backward(spec, params, cache, 2.0 * diff / diff.size)
    return loss, grads


def adam_step(params: dict, grads: dict, state: AdamState) -> tuple[dict, AdamState]:
    """One bias-corrected Adam update; returns new parameter arrays and the advanced state."""
    if set(params) != set(grads):
        raise ShapeError("gradient keys do not match parameter keys")
    state.t += 1
    c1 = 1.0 - state.beta1**state.t
    c2 = 1.0 - state.beta2**state.t
    new = {}
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=float)
        if g.shape != np.shape(p):
            raise ShapeError(f"gradient for {name} has shape {g.shape}, parameter {np.shape(p)}")
        m = state.m.get(name, np.zeros_like(g))
        v = state.v.get(name, np.zeros_like(g))
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * g * g
        state.m[name], state.v[name] = m, v
        new[name] = p - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return new, state


def clip_global_norm(grads: dict, max_norm: float | None) -> tuple[dict, float]:
    norm = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if max_norm is None or norm <= max_norm or norm == 0.0:
        return grads, norm
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}, norm


def _streams(seed: int):
    init, shuffle, drop = np.random.SeedSequence(seed).spawn(3)
    return tuple(np.random.default_rng(s) for s in (init, shuffle, drop))


def predict_series(spec: NetSpec, params: dict, windows) -> np.ndarray:
    """Eval-mode prediction per window.

    Windows are evaluated one at a time so a prediction never depends on which
    other windows share the call.
    """
    X = _windows(spec, windows)
    out = np.empty(len(X))
    for i in range(len(X)):
        out[i] = network_forward_train(spec, params, X[i : i + 1], "eval")[0][0, 0]
    return out


def _rmse_eval(spec, params, X, y) -> float:
    pred = network_forward_train(spec, params, X, "eval")[0][:, 0]
    return float(np.sqrt(np.mean((pred - y) ** 2)))


def train(spec: NetSpec, dataset: WindowedDataset, config: TrainConfig = TrainConfig(), params: dict | None = None):
    """Minibatch Adam on MSE; returns ``(params, history)`` with the eval-mode RMSE after every epoch.

    The seed drives three independent streams: initialization, per-epoch
    shuffling and dropout masks. The last partial batch is kept.
    """
    X = _windows(spec, dataset.inputs)
    y = np.asarray(dataset.targets, dtype=float)
    if len(X) == 0:
        raise InputError("cannot train on an empty dataset")
    if len(y) != len(X):
        raise ShapeError(f"{len(X)} windows but {len(y)} targets")
    init_rng, shuffle_rng, drop_rng = _streams(config.seed)
    params = init_params(spec, init_rng) if params is None else {k: np.array(v, dtype=float) for k, v in params.items()}
    state = AdamState(lr=config.lr)
    history = []
    n = len(X)
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(n) if config.shuffle else np.arange(n)
        for start in range(0, n, config.batch):
            idx = order[start : start + config.batch]
            loss, grads = mse_loss(spec, params, X[idx], y[idx], "train", drop_rng)
            if not math.isfinite(loss):
                raise DivergenceError(f"non-finite training loss at epoch {epoch}", epoch=epoch)
            grads, _ = clip_global_norm(grads, config.clip_norm)
            params, state = adam_step(params, grads, state)
        score = _rmse_eval(spec, params, X, y)
        if not math.isfinite(score):
            raise DivergenceError(f"non-finite RMSE after epoch {epoch}", epoch=epoch)
        history.append(score)
        log.debug("epoch %d rmse %.6g", epoch, score)
    return params, history


def encode_params(spec: NetSpec, params: dict, data_name: str) -> tuple[bytes, str]:
    """Flat little-endian float64 payload plus a JSON manifest naming each array's shape and offset."""
    entries, offset, chunks = [], 0, []
    for name in sorted(params):
        a = np.ascontiguousarray(params[name], dtype="<f8")
        entries.append({"name": name, "shape": list(a.shape), "offset": offset, "count": int(a.size)})
        offset += a.size
        chunks.append(a.ravel())
    spec_dict = asdict(spec)
    spec_dict["widths"] = list(spec.widths)
    manifest = {"format": FORMAT_VERSION, "dtype": "<f8", "spec": spec_dict, "arrays": entries, "data": data_name}
    payload = np.concatenate(chunks).tobytes() if chunks else b""
    return payload, json.dumps(manifest, indent=2, sort_keys=True) + "\n"


def save_params(spec: NetSpec, params: dict, stem) -> tuple[Path, Path]:
    """Write ``<stem>.bin`` and its manifest ``<stem>.json``; ``load_params`` takes the manifest path."""
    stem = Path(stem)
    bin_path, json_path = stem.with_suffix(".bin"), stem.with_suffix(".json")
    payload, manifest = encode_params(spec, params, bin_path.name)
    bin_path.write_bytes(payload)
    json_path.write_text(manifest)
    return bin_path, json_path


def load_params(manifest_path) -> tuple[NetSpec, dict]:
    manifest_path = Path(manifest_path)
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("format") != FORMAT_VERSION:
        raise InputError(f"unsupported parameter format {manifest.get('format')!r}")
    flat = np.frombuffer((manifest_path.parent / manifest["data"]).read_bytes(), dtype=manifest["dtype"])
    params = {}
    for e in manifest["arrays"]:
        chunk = flat[e["offset"] : e["offset"] + e["count"]]
        if len(chunk) != e["count"]:
            raise InputError(f"parameter file truncated at {e['name']}")
        params[e["name"]] = chunk.reshape(e["shape"]).astype(float)
    return NetSpec(**manifest["spec"]), params
