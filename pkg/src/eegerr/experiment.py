"""Evaluation protocol: balanced repeated random splits and metrics.

Intra-subject runs repeat {undersample -> stratified split -> fit scaler on
train -> train -> evaluate} with per-repetition seeds derived from a master
seed. Inter-subject runs train on one subject's balanced pool and evaluate
on another's. All repetition seeds are recorded in the report so any single
repetition can be reproduced in isolation.

The positive class for precision/recall/F-score is always ERR.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace

import numpy as np

from ._version import __version__ as _tool_version
from .errors import DataError
from .estimator import SequenceClassifier
from .featurize import TrialFeatures
from .nn import predict as _predict

ARCHITECTURES = ("bilstm", "lstm", "gru")


@dataclass
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f_score: float
    undefined: tuple[str, ...] = ()


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "intra"            # intra | inter
    repetitions: int = 10
    train_fraction: float = 0.75
    architecture: str = "bilstm"
    seed: int = 0
    hidden_dim: int = 20
    epochs: int = 5
    batch_size: int = 16
    learning_rate: float = 1e-3

    def __post_init__(self):
        if self.mode not in ("intra", "inter"):
            raise DataError(f"mode must be intra or inter, got {self.mode!r}")
        if self.repetitions < 1:
            raise DataError("repetitions must be >= 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise DataError("train_fraction must lie in (0, 1)")
        if self.architecture not in ARCHITECTURES:
            raise DataError(f"unknown architecture {self.architecture!r}")
        if self.seed < 0:
            raise DataError("seed must be a non-negative integer")


@dataclass
class RepetitionResult:
    repetition: int
    seeds: dict[str, int]
    confusion: ConfusionMatrix
    metrics: MetricsReport
    test_trials: list[list]        # [subject_id, trial_index] per test sample
    final_train_loss: float


@dataclass
class ExperimentReport:
    config: dict
    repetitions: list[RepetitionResult]
    aggregates: dict[str, dict[str, float]]
    tool_version: str = _tool_version


# ---------------------------------------------------------------------------
# Protocol pieces


def undersample(trials: list[TrialFeatures], seed: int) -> list[TrialFeatures]:
    """Balance classes by uniform subsampling of the majority class.

    Keeps min(|OK|, |ERR|) samples of each class, preserving the input order
    of the kept items. Raises DataError if either class is absent.
    """
    ok_idx = [i for i, t in enumerate(trials) if t.label_index == 0]
    err_idx = [i for i, t in enumerate(trials) if t.label_index == 1]
    if not ok_idx or not err_idx:
        raise DataError("undersampling needs both classes present")
    keep = min(len(ok_idx), len(err_idx))
    rng = np.random.default_rng(seed)
    chosen = set()
    for idx in (ok_idx, err_idx):
        if len(idx) == keep:
            chosen.update(idx)
        else:
            chosen.update(rng.choice(idx, size=keep, replace=False).tolist())
    return [trials[i] for i in sorted(chosen)]


def random_split(
    trials: list[TrialFeatures], train_fraction: float, seed: int
) -> tuple[list[TrialFeatures], list[TrialFeatures]]:
    """Seeded class-stratified shuffle split.

    Each class is shuffled and cut at round(fraction * class size); the two
    parts are disjoint and exhaustive. Raises DataError if either part would
    come out empty.
    """
    if len(trials) < 2:
        raise DataError("need at least 2 trials to split")
    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for cls in (0, 1):
        idx = np.array([i for i, t in enumerate(trials) if t.label_index == cls])
        if len(idx) == 0:
            continue
        perm = rng.permutation(len(idx))
        cut = round(train_fraction * len(idx))
        train_idx.extend(idx[perm[:cut]].tolist())
        test_idx.extend(idx[perm[cut:]].tolist())
    if not train_idx or not test_idx:
        raise DataError(
            f"train_fraction={train_fraction} leaves an empty part "
            f"for {len(trials)} trials"
        )
    return (
        [trials[i] for i in sorted(train_idx)],
        [trials[i] for i in sorted(test_idx)],
    )


def evaluate(predictions: np.ndarray, labels: np.ndarray) -> ConfusionMatrix:
    """Count a confusion matrix with ERR (1) as the positive class."""
    predictions = np.asarray(predictions, dtype=int)
    labels = np.asarray(labels, dtype=int)
    if predictions.shape != labels.shape or predictions.size == 0:
        raise DataError("predictions and labels must be equal-length, non-empty")
    return ConfusionMatrix(
        tp=int(np.sum((predictions == 1) & (labels == 1))),
        fp=int(np.sum((predictions == 1) & (labels == 0))),
        fn=int(np.sum((predictions == 0) & (labels == 1))),
        tn=int(np.sum((predictions == 0) & (labels == 0))),
    )


def evaluate_model(model, test_samples) -> ConfusionMatrix:
    """Confusion matrix of a trained recurrent model over SeqSamples."""
    if not test_samples:
        raise DataError("empty test set")
    preds = np.array([_predict(model, s)[0] for s in test_samples])
    labels = np.array([s.label for s in test_samples])
    return evaluate(preds, labels)


def metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Accuracy, precision, recall and F-score (harmonic P/R mean).

    Ratios with a zero denominator are reported as 0.0 and named in the
    ``undefined`` field instead of propagating NaN.
    """
    if cm.total == 0:
        raise DataError("empty confusion matrix")
    undefined = []
    accuracy = (cm.tp + cm.tn) / cm.total
    if cm.tp + cm.fp > 0:
        precision = cm.tp / (cm.tp + cm.fp)
    else:
        precision = 0.0
        undefined.append("precision")
    if cm.tp + cm.fn > 0:
        recall = cm.tp / (cm.tp + cm.fn)
    else:
        recall = 0.0
        undefined.append("recall")
    if precision + recall > 0:
        f_score = 2.0 * precision * recall / (precision + recall)
    else:
        f_score = 0.0
        undefined.append("f_score")
    return MetricsReport(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f_score=f_score,
        undefined=tuple(undefined),
    )


# ---------------------------------------------------------------------------
# Runners


def _repetition_seeds(master_seed: int, repetition: int) -> dict[str, int]:
    """Four independent sub-seeds per repetition, derived from the master
    seed only (never from the architecture, so compare runs share splits)."""
    ss = np.random.SeedSequence([master_seed & 0xFFFFFFFFFFFFFFFF, repetition])
    names = ("undersample", "split", "model", "undersample_test")
    states = ss.generate_state(len(names))
    return {name: int(s) for name, s in zip(names, states)}


def _classifier(cfg: ExperimentConfig, seed: int) -> SequenceClassifier:
    return SequenceClassifier(
        architecture=cfg.architecture,
        hidden_dim=cfg.hidden_dim,
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate,
        seed=seed,
        normalize=True,
    )


def _fit_and_score(
    cfg: ExperimentConfig,
    rep: int,
    seeds: dict[str, int],
    train_set: list[TrialFeatures],
    test_set: list[TrialFeatures],
) -> RepetitionResult:
    clf = _classifier(cfg, seeds["model"])
    clf.fit(
        np.stack([t.matrix for t in train_set]),
        np.array([t.label_index for t in train_set]),
    )
    preds = clf.predict(np.stack([t.matrix for t in test_set]))
    labels = np.array([t.label_index for t in test_set])
    cm = evaluate(preds, labels)
    return RepetitionResult(
        repetition=rep,
        seeds=seeds,
        confusion=cm,
        metrics=metrics(cm),
        test_trials=[[t.subject_id, t.trial_index] for t in test_set],
        final_train_loss=clf.history_[-1],
    )


def _aggregate(reps: list[RepetitionResult]) -> dict[str, dict[str, float]]:
    out = {}
    for name in ("accuracy", "precision", "recall", "f_score"):
        values = np.array([getattr(r.metrics, name) for r in reps])
        out[name] = {"mean": float(values.mean()), "std": float(values.std())}
    return out


def run_intra(
    features: list[TrialFeatures], cfg: ExperimentConfig
) -> ExperimentReport:
    """Repeated balanced random-split evaluation on one subject's trials."""
    reps = []
    for rep in range(cfg.repetitions):
        seeds = _repetition_seeds(cfg.seed, rep)
        balanced = undersample(features, seeds["undersample"])
        train_set, test_set = random_split(balanced, cfg.train_fraction, seeds["split"])
        reps.append(_fit_and_score(cfg, rep, seeds, train_set, test_set))
    return ExperimentReport(
        config={**asdict(cfg), "mode": "intra"},
        repetitions=reps,
        aggregates=_aggregate(reps),
    )


def run_inter(
    train_features: list[TrialFeatures],
    test_features: list[TrialFeatures],
    cfg: ExperimentConfig,
) -> ExperimentReport:
    """Train on one subject's balanced pool, evaluate on another's.

    Each repetition redraws both undersamplings, so the majority-class
    subsets (and the model seed) vary across repetitions.
    """
    reps = []
    for rep in range(cfg.repetitions):
        seeds = _repetition_seeds(cfg.seed, rep)
        train_set = undersample(train_features, seeds["undersample"])
        test_set = undersample(test_features, seeds["undersample_test"])
        reps.append(_fit_and_score(cfg, rep, seeds, train_set, test_set))
    return ExperimentReport(
        config={**asdict(cfg), "mode": "inter"},
        repetitions=reps,
        aggregates=_aggregate(reps),
    )


def compare_architectures(
    features: list[TrialFeatures],
    cfg: ExperimentConfig,
    test_features: list[TrialFeatures] | None = None,
) -> dict[str, ExperimentReport]:
    """Run every architecture under identical data seeds.

    Because repetition seeds depend only on the master seed and repetition
    index, all three rows see byte-identical undersamplings and splits; only
    the recurrent layer changes.
    """
    table = {}
    for arch in ARCHITECTURES:
        arch_cfg = replace(cfg, architecture=arch)
        if test_features is None:
            table[arch] = run_intra(features, arch_cfg)
        else:
            table[arch] = run_inter(features, test_features, arch_cfg)
    return table


# ---------------------------------------------------------------------------
# Serialization


def report_to_dict(report: ExperimentReport) -> dict:
    return {
        "tool_version": report.tool_version,
        "config": report.config,
        "aggregates": report.aggregates,
        "repetitions": [
            {
                "repetition": r.repetition,
                "seeds": r.seeds,
                "confusion": asdict(r.confusion),
                "metrics": {
                    "accuracy": r.metrics.accuracy,
                    "precision": r.metrics.precision,
                    "recall": r.metrics.recall,
                    "f_score": r.metrics.f_score,
                    "undefined": list(r.metrics.undefined),
                },
                "test_trials": r.test_trials,
                "final_train_loss": r.final_train_loss,
            }
            for r in report.repetitions
        ],
    }


def report_to_json(report: ExperimentReport) -> str:
    return json.dumps(report_to_dict(report), indent=2) + "\n"


def report_summary(report: ExperimentReport) -> str:
    """Plain-text table: one row per repetition plus the aggregate line."""
    lines = [
        f"{'rep':>4} {'acc':>8} {'prec':>8} {'recall':>8} {'fscore':>8} "
        f"{'tp':>4} {'fp':>4} {'fn':>4} {'tn':>4}"
    ]
    for r in report.repetitions:
        m, c = r.metrics, r.confusion
        lines.append(
            f"{r.repetition:>4} {m.accuracy:8.4f} {m.precision:8.4f} "
            f"{m.recall:8.4f} {m.f_score:8.4f} {c.tp:>4} {c.fp:>4} {c.fn:>4} {c.tn:>4}"
        )
    agg = report.aggregates
    lines.append(
        f"mean {agg['accuracy']['mean']:8.4f} {agg['precision']['mean']:8.4f} "
        f"{agg['recall']['mean']:8.4f} {agg['f_score']['mean']:8.4f}"
    )
    lines.append(
        f" std {agg['accuracy']['std']:8.4f} {agg['precision']['std']:8.4f} "
        f"{agg['recall']['std']:8.4f} {agg['f_score']['std']:8.4f}"
    )
    return "\n".join(lines) + "\n"
