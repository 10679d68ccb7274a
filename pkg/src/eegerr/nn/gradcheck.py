"""Finite-difference verification of the analytic gradients."""

from __future__ import annotations

from ..errors import DataError
from .backprop import backward
from .model import Model, SeqSample, cross_entropy, forward


def _loss(model: Model, sample: SeqSample) -> float:
    probs, _ = forward(model, sample)
    return cross_entropy(probs, sample.label)


def grad_check(model: Model, sample: SeqSample, eps: float = 1e-5) -> float:
    """Max relative error between BPTT and central finite differences.

    Every parameter entry is perturbed by +-eps in place; the relative error
    is |analytic - numeric| / max(|analytic|, |numeric|, 1e-12). The model is
    restored bit-exactly before returning.
    """
    if eps <= 0:
        raise DataError("eps must be > 0")
    probs, cache = forward(model, sample)
    analytic = backward(model, sample, cache)

    worst = 0.0
    params = model.params()
    for name, arr in params.items():
        grad = analytic[name]
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + eps
            lp = _loss(model, sample)
            flat[j] = orig - eps
            lm = _loss(model, sample)
            flat[j] = orig
            numeric = (lp - lm) / (2.0 * eps)
            a = gflat[j]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-12)
            worst = max(worst, rel)
    return worst
