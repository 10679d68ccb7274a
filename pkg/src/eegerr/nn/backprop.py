"""Exact gradients of cross-entropy composed with forward, via
backpropagation through time.

The public functions return gradients in the same name space as
``Model.params()``. ``backward_batch`` returns gradients summed over the
batch; the training loop divides by the batch size to average.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from .model import Model, SeqSample


def _lstm_direction_backward(cell, cache, d_last, hidden):
    """BPTT through one LSTM direction given the gradient at the final h."""
    xs, hs, cs = cache["xs"], cache["hs"], cache["cs"]
    n_steps = xs.shape[1]
    dw_x = np.zeros_like(cell.w_x)
    dw_h = np.zeros_like(cell.w_h)
    db = np.zeros_like(cell.b)

    dh = d_last
    dc = np.zeros_like(d_last)
    for t in range(n_steps - 1, -1, -1):
        i = cache["i"][:, t]
        f = cache["f"][:, t]
        g = cache["g"][:, t]
        o = cache["o"][:, t]
        tc = cache["tanh_c"][:, t]

        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * cs[:, t]

        da = np.concatenate(
            [
                di * i * (1.0 - i),
                df * f * (1.0 - f),
                dg * (1.0 - g * g),
                do * o * (1.0 - o),
            ],
            axis=1,
        )
        dw_x += da.T @ xs[:, t]
        dw_h += da.T @ hs[:, t]
        db += da.sum(axis=0)
        dh = da @ cell.w_h
        dc = dc * f
    return dw_x, dw_h, db


def _gru_direction_backward(cell, cache, d_last, hidden):
    xs, hs = cache["xs"], cache["hs"]
    n_steps = xs.shape[1]
    dw_x = np.zeros_like(cell.w_x)
    dw_h = np.zeros_like(cell.w_h)
    db = np.zeros_like(cell.b)
    w_h_r = cell.w_h[:hidden]
    w_h_z = cell.w_h[hidden : 2 * hidden]
    w_h_n = cell.w_h[2 * hidden :]

    dh = d_last
    for t in range(n_steps - 1, -1, -1):
        r = cache["r"][:, t]
        z = cache["z"][:, t]
        n = cache["n"][:, t]
        rh = cache["rh"][:, t]
        h_prev = hs[:, t]

        dz = dh * (h_prev - n)
        dn = dh * (1.0 - z)
        dh_prev = dh * z

        da_n = dn * (1.0 - n * n)
        drh = da_n @ w_h_n
        dr = drh * h_prev
        dh_prev = dh_prev + drh * r

        da_r = dr * r * (1.0 - r)
        da_z = dz * z * (1.0 - z)

        x_t = xs[:, t]
        dw_x[:hidden] += da_r.T @ x_t
        dw_x[hidden : 2 * hidden] += da_z.T @ x_t
        dw_x[2 * hidden :] += da_n.T @ x_t
        dw_h[:hidden] += da_r.T @ h_prev
        dw_h[hidden : 2 * hidden] += da_z.T @ h_prev
        dw_h[2 * hidden :] += da_n.T @ rh
        db[:hidden] += da_r.sum(axis=0)
        db[hidden : 2 * hidden] += da_z.sum(axis=0)
        db[2 * hidden :] += da_n.sum(axis=0)

        dh_prev = dh_prev + da_r @ w_h_r + da_z @ w_h_z
        dh = dh_prev
    return dw_x, dw_h, db


def backward_batch(
    model: Model, cache: dict, labels: np.ndarray
) -> dict[str, np.ndarray]:
    """Gradients of the summed cross-entropy over the batch in ``cache``."""
    probs = cache["probs"]
    labels = np.asarray(labels, dtype=int)
    if labels.shape != (probs.shape[0],):
        raise DataError(
            f"labels shape {labels.shape} does not match batch of {probs.shape[0]}"
        )
    feat = cache["feat"]
    hidden = model.hidden_dim

    dlogits = probs.copy()
    dlogits[np.arange(len(labels)), labels] -= 1.0

    grads: dict[str, np.ndarray] = {
        "dense.w": dlogits.T @ feat,
        "dense.b": dlogits.sum(axis=0),
    }
    dfeat = dlogits @ model.w_out

    direction_backward = (
        _lstm_direction_backward if model.kind == "lstm" else _gru_direction_backward
    )
    dw_x, dw_h, db = direction_backward(
        model.fwd, cache["fwd"], dfeat[:, :hidden], hidden
    )
    grads["fwd.w_x"] = dw_x
    grads["fwd.w_h"] = dw_h
    grads["fwd.b"] = db

    if model.bidirectional:
        dw_x, dw_h, db = direction_backward(
            model.bwd, cache["bwd"], dfeat[:, hidden:], hidden
        )
        grads["bwd.w_x"] = dw_x
        grads["bwd.w_h"] = dw_h
        grads["bwd.b"] = db
    return grads


def backward(model: Model, sample: SeqSample, cache: dict) -> dict[str, np.ndarray]:
    """Exact per-sample gradients; ``cache`` must come from forward() on the
    same model and sample."""
    if cache.get("batch_shape", (0,))[0] != 1:
        raise DataError("backward expects a cache from a single-sample forward")
    return backward_batch(model, cache, np.array([sample.label]))
