"""JSON checkpoints: architecture, parameters, optional normalizer."""

from __future__ import annotations

import json

import numpy as np

from ..errors import DataError
from ..featurize import Normalizer
from .model import CellParams, Model, GATES

FORMAT_VERSION = 1


def _encode(arr: np.ndarray) -> dict:
    return {"shape": list(arr.shape), "data": arr.reshape(-1).tolist()}


def _decode(entry: dict, expected_shape: tuple[int, ...], name: str) -> np.ndarray:
    shape = tuple(entry["shape"])
    if shape != expected_shape:
        raise DataError(
            f"checkpoint parameter {name!r} has shape {shape}, "
            f"expected {expected_shape}"
        )
    data = np.array(entry["data"], dtype=float)
    if data.size != int(np.prod(shape)):
        raise DataError(f"checkpoint parameter {name!r} has wrong element count")
    return data.reshape(shape)


def save_checkpoint(
    model: Model, path, normalizer: Normalizer | None = None, seed: int | None = None
) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "bidirectional": model.bidirectional,
        "input_dim": model.input_dim,
        "hidden_dim": model.hidden_dim,
        "seed": seed,
        "params": {name: _encode(arr) for name, arr in model.params().items()},
        "normalizer": None
        if normalizer is None
        else {"means": normalizer.means.tolist(), "stds": normalizer.stds.tolist()},
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_checkpoint(path) -> tuple[Model, Normalizer | None]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != FORMAT_VERSION:
        raise DataError(
            f"unsupported checkpoint version {doc.get('format_version')!r}"
        )
    kind = doc["kind"]
    if kind not in GATES:
        raise DataError(f"unknown recurrent kind {kind!r} in checkpoint")
    bidi = bool(doc["bidirectional"])
    d = int(doc["input_dim"])
    h = int(doc["hidden_dim"])
    g = GATES[kind]
    feat = h * (2 if bidi else 1)

    expected = {
        "fwd.w_x": (g * h, d),
        "fwd.w_h": (g * h, h),
        "fwd.b": (g * h,),
        "dense.w": (2, feat),
        "dense.b": (2,),
    }
    if bidi:
        expected.update(
            {"bwd.w_x": (g * h, d), "bwd.w_h": (g * h, h), "bwd.b": (g * h,)}
        )
    params = doc["params"]
    if set(params) != set(expected):
        raise DataError(
            f"checkpoint parameters {sorted(params)} do not match "
            f"architecture (expected {sorted(expected)})"
        )
    arrays = {name: _decode(params[name], shape, name) for name, shape in expected.items()}

    model = Model(
        kind=kind,
        bidirectional=bidi,
        input_dim=d,
        hidden_dim=h,
        fwd=CellParams(arrays["fwd.w_x"], arrays["fwd.w_h"], arrays["fwd.b"]),
        bwd=CellParams(arrays["bwd.w_x"], arrays["bwd.w_h"], arrays["bwd.b"])
        if bidi
        else None,
        w_out=arrays["dense.w"],
        b_out=arrays["dense.b"],
    )
    norm = None
    if doc.get("normalizer") is not None:
        norm = Normalizer(
            means=np.array(doc["normalizer"]["means"], dtype=float),
            stds=np.array(doc["normalizer"]["stds"], dtype=float),
        )
    return model, norm
