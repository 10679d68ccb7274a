"""Scikit-learn style front ends so the pipeline composes with the ecosystem.

``SequenceClassifier`` wraps the from-scratch recurrent networks behind the
usual fit/predict/predict_proba contract; ``TrialFeaturizer`` turns raw
trials into feature sequences via transform. Both inherit get_params /
set_params from BaseEstimator, so they clone and grid-search like any other
estimator.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.exceptions import NotFittedError

from .dsp import FrameConfig, design_mel_filterbank
from .errors import DataError
from .featurize import N_FEATURES, Normalizer, featurize_trial
from .nn import SeqSample, TrainConfig, model_from_architecture, train
from .nn.model import forward_batch


def _as_sequences(X) -> np.ndarray:
    """Validate and stack input into (n_samples, n_steps, n_features)."""
    if isinstance(X, np.ndarray) and X.ndim == 3:
        arr = np.asarray(X, dtype=float)
    else:
        mats = [np.asarray(m, dtype=float) for m in X]
        if not mats:
            raise DataError("empty input")
        shape = mats[0].shape
        if any(m.shape != shape for m in mats):
            raise DataError("all sequences must share the same shape")
        arr = np.stack(mats)
    if arr.ndim != 3:
        raise DataError("expected (n_samples, n_steps, n_features) input")
    if not np.all(np.isfinite(arr)):
        raise DataError("input contains non-finite values")
    return arr


class SequenceClassifier(ClassifierMixin, BaseEstimator):
    """Binary sequence classifier over per-channel feature vectors.

    Parameters mirror the experiment defaults: a bidirectional LSTM with 20
    hidden units trained for 5 epochs with Adam. ``normalize`` fits a
    per-column z-scorer on the training data and applies it at predict time,
    so test data never leaks into the scaling.
    """

    def __init__(
        self,
        architecture: str = "bilstm",
        hidden_dim: int = 20,
        epochs: int = 5,
        batch_size: int = 16,
        learning_rate: float = 1e-3,
        seed: int = 0,
        normalize: bool = True,
    ):
        self.architecture = architecture
        self.hidden_dim = hidden_dim
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.seed = seed
        self.normalize = normalize

    def fit(self, X, y):
        sequences = _as_sequences(X)
        y = np.asarray(y, dtype=int)
        if y.shape != (sequences.shape[0],):
            raise DataError("y must hold one label per sequence")
        if not np.all(np.isin(y, [0, 1])):
            raise DataError("labels must be 0 (OK) or 1 (ERR)")
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise DataError(f"seed must be a non-negative integer, got {self.seed!r}")

        self.normalizer_ = None
        if self.normalize:
            self.normalizer_ = Normalizer().fit_rows(
                sequences.reshape(-1, sequences.shape[2])
            )
            sequences = (sequences - self.normalizer_.means) / self.normalizer_.stds

        # Split the estimator seed into independent init and shuffle streams.
        init_seed, train_seed = np.random.SeedSequence(self.seed).generate_state(2)
        model = model_from_architecture(
            self.architecture,
            self.hidden_dim,
            int(init_seed),
            input_dim=sequences.shape[2],
        )
        samples = [SeqSample(s, int(lbl)) for s, lbl in zip(sequences, y)]
        cfg = TrainConfig(
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            seed=int(train_seed),
        )
        self.model_, self.history_ = train(model, samples, cfg)
        self.classes_ = np.array([0, 1])
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError("SequenceClassifier has not been fitted")

    def predict_proba(self, X) -> np.ndarray:
        self._check_fitted()
        sequences = _as_sequences(X)
        if self.normalizer_ is not None:
            sequences = (sequences - self.normalizer_.means) / self.normalizer_.stds
        probs, _ = forward_batch(self.model_, sequences)
        return probs

    def predict(self, X) -> np.ndarray:
        probs = self.predict_proba(X)
        # strict inequality: a 0.5/0.5 tie goes to class 0 (OK)
        return (probs[:, 1] > probs[:, 0]).astype(int)


class TrialFeaturizer(TransformerMixin, BaseEstimator):
    """Stateless transform from Trial objects to (n, channels, 13) arrays."""

    def __init__(
        self,
        sample_rate_hz: float = 2500.0,
        num_filters: int = 20,
        f_max_hz: float = 200.0,
        frame_cfg: FrameConfig | None = None,
        reducer: str = "mean",
    ):
        self.sample_rate_hz = sample_rate_hz
        self.num_filters = num_filters
        self.f_max_hz = f_max_hz
        self.frame_cfg = frame_cfg
        self.reducer = reducer

    def fit(self, X=None, y=None):
        return self

    def transform(self, trials) -> np.ndarray:
        cfg = self.frame_cfg or FrameConfig()
        fb = design_mel_filterbank(
            self.num_filters,
            self.sample_rate_hz,
            cfg.resolve_n_dft(self.sample_rate_hz),
            f_max=self.f_max_hz,
        )
        mats = [
            featurize_trial(t, self.sample_rate_hz, cfg, fb, reducer=self.reducer).matrix
            for t in trials
        ]
        if not mats:
            return np.empty((0, 0, N_FEATURES))
        return np.stack(mats)
