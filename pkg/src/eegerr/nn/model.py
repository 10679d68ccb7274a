"""Sequence classifiers built from scratch on numpy.

A model reads a sequence of feature vectors (one per EEG channel), runs it
through a single LSTM or GRU layer (optionally bidirectionally, with a
second, independent parameter set over the reversed sequence) and maps the
concatenated final hidden states through a dense layer and a softmax onto
the two classes (0 = OK, 1 = ERR).

Everything is float64: the analytic gradients in backprop.py are validated
against central finite differences, which needs the headroom.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError, TrainingDivergedError

N_CLASSES = 2
GATES = {"lstm": 4, "gru": 3}  # lstm packs (i, f, g, o); gru packs (r, z, n)

PROB_FLOOR = 1e-15


@dataclass
class SeqSample:
    """One classification instance: (n_steps, n_features) plus class index."""

    sequence: np.ndarray
    label: int

    def __post_init__(self):
        self.sequence = np.asarray(self.sequence, dtype=float)
        if self.sequence.ndim != 2 or self.sequence.shape[0] < 1:
            raise DataError("sequence must be a non-empty (steps, features) matrix")
        if self.label not in (0, 1):
            raise DataError(f"label must be 0 or 1, got {self.label}")


@dataclass
class CellParams:
    """One recurrent direction: stacked gate weights.

    ``w_x`` is (gates*H, D), ``w_h`` is (gates*H, H), ``b`` is (gates*H,).
    For the GRU the candidate block of ``w_h`` multiplies r * h_prev.
    """

    w_x: np.ndarray
    w_h: np.ndarray
    b: np.ndarray


@dataclass
class Model:
    kind: str              # "lstm" | "gru"
    bidirectional: bool
    input_dim: int
    hidden_dim: int
    fwd: CellParams
    bwd: CellParams | None
    w_out: np.ndarray      # (2, feat) with feat = hidden_dim * (2 if bidi else 1)
    b_out: np.ndarray      # (2,)

    @property
    def feature_dim(self) -> int:
        return self.hidden_dim * (2 if self.bidirectional else 1)

    def params(self) -> dict[str, np.ndarray]:
        """Live views of every parameter array, keyed by a stable name."""
        out = {
            "fwd.w_x": self.fwd.w_x,
            "fwd.w_h": self.fwd.w_h,
            "fwd.b": self.fwd.b,
        }
        if self.bwd is not None:
            out["bwd.w_x"] = self.bwd.w_x
            out["bwd.w_h"] = self.bwd.w_h
            out["bwd.b"] = self.bwd.b
        out["dense.w"] = self.w_out
        out["dense.b"] = self.b_out
        return out

    def copy(self) -> "Model":
        bwd = None
        if self.bwd is not None:
            bwd = CellParams(self.bwd.w_x.copy(), self.bwd.w_h.copy(), self.bwd.b.copy())
        return Model(
            kind=self.kind,
            bidirectional=self.bidirectional,
            input_dim=self.input_dim,
            hidden_dim=self.hidden_dim,
            fwd=CellParams(self.fwd.w_x.copy(), self.fwd.w_h.copy(), self.fwd.b.copy()),
            bwd=bwd,
            w_out=self.w_out.copy(),
            b_out=self.b_out.copy(),
        )


def init_model(
    kind: str,
    bidirectional: bool,
    hidden_dim: int,
    seed: int,
    input_dim: int = 13,
) -> Model:
    """Seeded uniform(-1/sqrt(H), +1/sqrt(H)) weights, zero biases except the
    LSTM forget gate, whose bias starts at 1.0 to keep early memory open."""
    if kind not in GATES:
        raise DataError(f"unknown recurrent kind {kind!r}")
    if hidden_dim < 1:
        raise DataError("hidden_dim must be >= 1")
    rng = np.random.default_rng(seed)
    limit = 1.0 / np.sqrt(hidden_dim)
    g = GATES[kind]
    h = hidden_dim

    def cell() -> CellParams:
        w_x = rng.uniform(-limit, limit, size=(g * h, input_dim))
        w_h = rng.uniform(-limit, limit, size=(g * h, h))
        b = np.zeros(g * h)
        if kind == "lstm":
            b[h : 2 * h] = 1.0
        return CellParams(w_x, w_h, b)

    fwd = cell()
    bwd = cell() if bidirectional else None
    feat = h * (2 if bidirectional else 1)
    w_out = rng.uniform(-limit, limit, size=(N_CLASSES, feat))
    b_out = np.zeros(N_CLASSES)
    return Model(
        kind=kind,
        bidirectional=bidirectional,
        input_dim=input_dim,
        hidden_dim=hidden_dim,
        fwd=fwd,
        bwd=bwd,
        w_out=w_out,
        b_out=b_out,
    )


def model_from_architecture(
    architecture: str, hidden_dim: int, seed: int, input_dim: int = 13
) -> Model:
    """Map the architecture names used in experiments onto init_model."""
    if architecture == "bilstm":
        return init_model("lstm", True, hidden_dim, seed, input_dim)
    if architecture in ("lstm", "gru"):
        return init_model(architecture, False, hidden_dim, seed, input_dim)
    raise DataError(f"unknown architecture {architecture!r}")


def softmax(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits, dtype=float)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(probs: np.ndarray, label: int) -> float:
    """Negative log-likelihood of the true class, probability floored so a
    confidently wrong model yields a large but finite loss."""
    return float(-np.log(max(float(probs[label]), PROB_FLOOR)))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _lstm_direction(cell: CellParams, xs: np.ndarray, hidden: int) -> dict:
    """Run an LSTM over xs (B, N, D); returns the step-by-step cache."""
    b_sz, n_steps, _ = xs.shape
    hs = np.zeros((b_sz, n_steps + 1, hidden))
    cs = np.zeros((b_sz, n_steps + 1, hidden))
    gi = np.empty((b_sz, n_steps, hidden))
    gf = np.empty_like(gi)
    gg = np.empty_like(gi)
    go = np.empty_like(gi)
    tanh_c = np.empty_like(gi)

    h = hs[:, 0]
    c = cs[:, 0]
    for t in range(n_steps):
        a = xs[:, t] @ cell.w_x.T + h @ cell.w_h.T + cell.b
        i = _sigmoid(a[:, :hidden])
        f = _sigmoid(a[:, hidden : 2 * hidden])
        g = np.tanh(a[:, 2 * hidden : 3 * hidden])
        o = _sigmoid(a[:, 3 * hidden :])
        c = f * c + i * g
        tc = np.tanh(c)
        h = o * tc
        gi[:, t], gf[:, t], gg[:, t], go[:, t] = i, f, g, o
        tanh_c[:, t] = tc
        hs[:, t + 1] = h
        cs[:, t + 1] = c
    return {
        "xs": xs, "hs": hs, "cs": cs,
        "i": gi, "f": gf, "g": gg, "o": go, "tanh_c": tanh_c,
    }


def _gru_direction(cell: CellParams, xs: np.ndarray, hidden: int) -> dict:
    b_sz, n_steps, _ = xs.shape
    hs = np.zeros((b_sz, n_steps + 1, hidden))
    gr = np.empty((b_sz, n_steps, hidden))
    gz = np.empty_like(gr)
    gn = np.empty_like(gr)
    rh = np.empty_like(gr)

    w_x_rz = cell.w_x[: 2 * hidden]
    w_h_rz = cell.w_h[: 2 * hidden]
    b_rz = cell.b[: 2 * hidden]
    w_x_n = cell.w_x[2 * hidden :]
    w_h_n = cell.w_h[2 * hidden :]
    b_n = cell.b[2 * hidden :]

    h = hs[:, 0]
    for t in range(n_steps):
        a_rz = xs[:, t] @ w_x_rz.T + h @ w_h_rz.T + b_rz
        r = _sigmoid(a_rz[:, :hidden])
        z = _sigmoid(a_rz[:, hidden:])
        gate_h = r * h
        n = np.tanh(xs[:, t] @ w_x_n.T + gate_h @ w_h_n.T + b_n)
        h = (1.0 - z) * n + z * h
        gr[:, t], gz[:, t], gn[:, t], rh[:, t] = r, z, n, gate_h
        hs[:, t + 1] = h
    return {"xs": xs, "hs": hs, "r": gr, "z": gz, "n": gn, "rh": rh}


def forward_batch(model: Model, batch: np.ndarray) -> tuple[np.ndarray, dict]:
    """Forward pass over a (B, N, D) batch; returns (probs (B, 2), cache).

    The cache keeps every activation that backprop needs; feed it unchanged
    to backward_batch.
    """
    batch = np.asarray(batch, dtype=float)
    if batch.ndim != 3:
        raise DataError("forward_batch expects a (batch, steps, features) array")
    if batch.shape[2] != model.input_dim:
        raise DataError(
            f"model expects {model.input_dim} features, got {batch.shape[2]}"
        )
    run = _lstm_direction if model.kind == "lstm" else _gru_direction

    cache: dict = {"batch_shape": batch.shape}
    cache["fwd"] = run(model.fwd, batch, model.hidden_dim)
    feat = cache["fwd"]["hs"][:, -1]
    if model.bidirectional:
        cache["bwd"] = run(model.bwd, batch[:, ::-1], model.hidden_dim)
        feat = np.concatenate([feat, cache["bwd"]["hs"][:, -1]], axis=1)

    logits = feat @ model.w_out.T + model.b_out
    if not np.all(np.isfinite(logits)):
        raise TrainingDivergedError("non-finite activation in forward pass")
    probs = softmax(logits)
    cache["feat"] = feat
    cache["probs"] = probs
    return probs, cache


def forward(model: Model, sample: SeqSample) -> tuple[np.ndarray, dict]:
    """Single-sample forward pass; probs is a length-2 simplex vector."""
    probs, cache = forward_batch(model, sample.sequence[None, :, :])
    return probs[0], cache


def predict(model: Model, sample: SeqSample) -> tuple[int, np.ndarray]:
    """Class decision: argmax probability, ties resolved to class 0 (OK)."""
    probs, _ = forward(model, sample)
    label = 1 if probs[1] > probs[0] else 0
    return label, probs
