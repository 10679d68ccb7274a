"""Per-trial feature assembly and train-fitted normalization.

Every trial maps to an ``n_channels x 13`` matrix whose row for a channel is

    [mean instantaneous frequency (Hz), mean spectral entropy (bits),
     mean MFCC 1..11]

with means taken over the short-time frames of that channel. The column
order is a frozen contract shared with the feature CSV and the classifiers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .dsp import (
    FrameConfig,
    MelFilterbank,
    Spectrogram,
    instantaneous_frequency,
    mfcc_from_spectrogram,
    spectral_entropy,
    stft_power,
)
from .errors import DataError
from .io import TRIAL_ERR, TRIAL_OK, Trial

N_FEATURES = 13
N_MFCC = 11

FEATURE_COLUMNS = ("instfreq", "entropy") + tuple(f"mfcc{i}" for i in range(1, 12))

STD_FLOOR = 1e-8


@dataclass
class TrialFeatures:
    subject_id: str
    trial_index: int
    label: str  # OK | ERR
    matrix: np.ndarray  # (n_channels, 13)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2 or self.matrix.shape[1] != N_FEATURES:
            raise DataError(
                f"feature matrix must have {N_FEATURES} columns, "
                f"got shape {self.matrix.shape}"
            )
        if not np.all(np.isfinite(self.matrix)):
            raise DataError("feature matrix contains non-finite values")
        if self.label not in (TRIAL_OK, TRIAL_ERR):
            raise DataError(f"unexpected label {self.label!r}")

    @property
    def label_index(self) -> int:
        return 0 if self.label == TRIAL_OK else 1


def featurize_trial(
    trial: Trial,
    fs: float,
    cfg: FrameConfig,
    fb: MelFilterbank,
    reducer: str = "mean",
) -> TrialFeatures:
    """Compute the channel x 13 feature matrix of one trial.

    Frames with zero total power are excluded from the per-channel reduction;
    a channel whose frames are all zero-power raises DataError.
    """
    if reducer == "mean":
        reduce = np.mean
    elif reducer == "median":
        reduce = np.median
    else:
        raise DataError(f"unknown reducer {reducer!r}")

    rows = np.empty((trial.samples.shape[0], N_FEATURES))
    for c, x in enumerate(trial.samples):
        spec = stft_power(x, fs, cfg)
        valid = spec.power.sum(axis=1) > 0.0
        if not valid.any():
            raise DataError(
                f"channel {c} of trial {trial.trial_index} has no frame "
                f"with nonzero power"
            )
        sub = Spectrogram(
            frame_times_s=spec.frame_times_s[valid],
            freqs_hz=spec.freqs_hz,
            power=spec.power[valid],
        )
        coeffs = mfcc_from_spectrogram(spec, fb, n_coeffs=N_MFCC)[valid]
        rows[c, 0] = reduce(instantaneous_frequency(sub))
        rows[c, 1] = reduce(spectral_entropy(sub))
        rows[c, 2:] = reduce(coeffs, axis=0)

    return TrialFeatures(
        subject_id=trial.subject_id,
        trial_index=trial.trial_index,
        label=trial.label,
        matrix=rows,
    )


class Normalizer:
    """Per-column z-scoring fitted on training features only.

    Means and standard deviations are pooled over every channel row of every
    training trial; standard deviations are floored at STD_FLOOR so constant
    columns stay finite.
    """

    def __init__(self, means: np.ndarray | None = None, stds: np.ndarray | None = None):
        self.means = None if means is None else np.asarray(means, dtype=float)
        self.stds = None if stds is None else np.asarray(stds, dtype=float)

    @property
    def fitted(self) -> bool:
        return self.means is not None

    def fit_rows(self, rows: np.ndarray) -> "Normalizer":
        rows = np.asarray(rows, dtype=float)
        if rows.ndim != 2 or rows.shape[0] == 0 or rows.shape[1] != N_FEATURES:
            raise DataError("normalizer needs a non-empty (rows, 13) matrix")
        self.means = rows.mean(axis=0)
        self.stds = np.maximum(rows.std(axis=0), STD_FLOOR)
        return self

    def fit(self, train: list[TrialFeatures]) -> "Normalizer":
        if not train:
            raise DataError("cannot fit a normalizer on an empty training set")
        ordered = sorted(train, key=lambda f: (f.subject_id, f.trial_index))
        return self.fit_rows(np.concatenate([f.matrix for f in ordered], axis=0))

    def transform_matrix(self, matrix: np.ndarray) -> np.ndarray:
        if not self.fitted:
            raise DataError("normalizer has not been fitted")
        return (np.asarray(matrix, dtype=float) - self.means) / self.stds

    def transform(self, feats: TrialFeatures) -> TrialFeatures:
        return replace(feats, matrix=self.transform_matrix(feats.matrix))


def fit_normalizer(train: list[TrialFeatures]) -> Normalizer:
    return Normalizer().fit(train)


def apply_normalizer(norm: Normalizer, feats: TrialFeatures) -> TrialFeatures:
    return norm.transform(feats)


# ---------------------------------------------------------------------------
# Feature CSV: one row per (trial, channel), full double precision.

_CSV_HEADER = "subject,trial,label,channel," + ",".join(
    f"f{i}" for i in range(1, N_FEATURES + 1)
)


def save_features(features: list[TrialFeatures], path) -> None:
    for f in features:
        if "," in f.subject_id or "\n" in f.subject_id:
            raise DataError(
                f"subject id {f.subject_id!r} may not contain commas or newlines"
            )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_CSV_HEADER + "\n")
        for f in features:
            for c, row in enumerate(f.matrix):
                values = ",".join(repr(float(v)) for v in row)
                fh.write(f"{f.subject_id},{f.trial_index},{f.label},{c},{values}\n")


def load_features(path) -> list[TrialFeatures]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().split("\n") if ln]
    if not lines or lines[0] != _CSV_HEADER:
        raise DataError(f"{path}: missing feature CSV header")

    groups: dict[tuple[str, int], dict] = {}
    order: list[tuple[str, int]] = []
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 4 + N_FEATURES:
            raise DataError(f"{path}: line {i} has {len(parts)} fields")
        subject, trial_s, label, channel_s = parts[:4]
        try:
            trial = int(trial_s)
            channel = int(channel_s)
            values = [float(v) for v in parts[4:]]
        except ValueError:
            raise DataError(f"{path}: unparsable field on line {i}") from None
        key = (subject, trial)
        if key not in groups:
            groups[key] = {"label": label, "rows": {}}
            order.append(key)
        if groups[key]["label"] != label:
            raise DataError(f"{path}: trial {key} has conflicting labels")
        if channel in groups[key]["rows"]:
            raise DataError(f"{path}: duplicate channel {channel} for trial {key}")
        groups[key]["rows"][channel] = values

    features = []
    for key in order:
        g = groups[key]
        channels = sorted(g["rows"])
        if channels != list(range(len(channels))):
            raise DataError(f"{path}: trial {key} has non-contiguous channels")
        matrix = np.array([g["rows"][c] for c in channels], dtype=float)
        features.append(
            TrialFeatures(
                subject_id=key[0], trial_index=key[1], label=g["label"], matrix=matrix
            )
        )
    return features
