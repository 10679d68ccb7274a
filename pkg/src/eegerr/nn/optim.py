"""Adam updates and the mini-batch training loop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError, TrainingDivergedError
from .backprop import backward_batch
from .model import Model, SeqSample, forward_batch


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5
    batch_size: int = 16
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise DataError("epochs must be >= 1")
        if self.batch_size < 1:
            raise DataError("batch_size must be >= 1")
        if self.learning_rate < 0:
            raise DataError("learning_rate must be >= 0")
        if self.seed < 0:
            raise DataError("seed must be a non-negative integer")


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    def copy(self) -> "AdamState":
        return AdamState(
            m={k: a.copy() for k, a in self.m.items()},
            v={k: a.copy() for k, a in self.v.items()},
            step=self.step,
        )


def init_adam_state(model: Model) -> AdamState:
    return AdamState(
        m={k: np.zeros_like(a) for k, a in model.params().items()},
        v={k: np.zeros_like(a) for k, a in model.params().items()},
        step=0,
    )


def adam_step(
    model: Model,
    grads: dict[str, np.ndarray],
    state: AdamState,
    cfg: TrainConfig,
) -> tuple[Model, AdamState]:
    """One Adam update with bias correction. Pure: inputs are left untouched
    and fresh model/state objects are returned."""
    params = model.params()
    for name, g in grads.items():
        if name not in params:
            raise DataError(f"gradient for unknown parameter {name!r}")
        if g.shape != params[name].shape:
            raise DataError(
                f"gradient shape {g.shape} does not match parameter "
                f"{name!r} of shape {params[name].shape}"
            )

    new_model = model.copy()
    new_state = state.copy()
    new_state.step += 1
    t = new_state.step
    bc1 = 1.0 - cfg.beta1**t
    bc2 = 1.0 - cfg.beta2**t

    new_params = new_model.params()
    for name, g in grads.items():
        m = new_state.m[name] = cfg.beta1 * new_state.m[name] + (1.0 - cfg.beta1) * g
        v = new_state.v[name] = cfg.beta2 * new_state.v[name] + (1.0 - cfg.beta2) * g * g
        update = cfg.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + cfg.eps)
        new_params[name] -= update
    return new_model, new_state


def train(
    model: Model,
    train_set: list[SeqSample],
    cfg: TrainConfig,
) -> tuple[Model, list[float]]:
    """Mini-batch Adam training.

    Each epoch shuffles the training set with the seeded generator, walks it
    in batches of ``cfg.batch_size`` (last batch may be short), and applies
    one Adam step per batch using the batch-mean gradient. Returns the
    trained model and the mean per-sample loss of each epoch. A non-finite
    loss aborts with TrainingDivergedError.
    """
    if not train_set:
        raise DataError("training set is empty")
    sequences = np.stack([s.sequence for s in train_set])
    labels = np.array([s.label for s in train_set], dtype=int)

    rng = np.random.default_rng(cfg.seed)
    state = init_adam_state(model)
    history: list[float] = []
    n = len(train_set)

    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            probs, cache = forward_batch(model, sequences[idx])
            batch_losses = -np.log(
                np.maximum(probs[np.arange(len(idx)), labels[idx]], 1e-15)
            )
            if not np.all(np.isfinite(batch_losses)):
                raise TrainingDivergedError(
                    f"non-finite loss in epoch {epoch}, batch at offset {start}"
                )
            total_loss += float(batch_losses.sum())
            grads = backward_batch(model, cache, labels[idx])
            grads = {k: g / len(idx) for k, g in grads.items()}
            model, state = adam_step(model, grads, state, cfg)
        history.append(total_loss / n)
    return model, history
