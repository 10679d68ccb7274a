"""Batch command-line interface.

Subcommands: synth, featurize, train, intra, inter, compare, gradcheck,
inspect-filterbank. Every command is fully seeded (no wall clock, no OS
entropy), writes its outputs atomically (temp file + rename) and embeds the
tool version plus the resolved configuration in every report, so rerunning a
command with the same inputs and seeds reproduces its outputs byte for byte.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
divergence.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from ._version import __version__
from .dsp import FrameConfig, design_mel_filterbank, filterbank_to_csv
from .errors import ConfigError, DataError, TrainingDivergedError
from .estimator import SequenceClassifier
from .experiment import (
    ExperimentConfig,
    compare_architectures,
    report_summary,
    report_to_json,
    run_inter,
    run_intra,
)
from .featurize import featurize_trial, load_features, save_features
from .io import load_annotations, load_recording, save_annotations, save_recording, segment_trials
from .nn import grad_check, model_from_architecture, save_checkpoint, SeqSample
from .synth import SynthSpec, synth_dataset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DIVERGED = 4


@dataclass
class RunConfig:
    """Flat key=value configuration shared by all subcommands.

    Unknown keys are rejected; absent keys keep these defaults. Command-line
    flags override file values.
    """

    # synthesis
    n_channels: int = 61
    duration_s: float = 60.0
    error_fraction: float = 0.2
    class_separation: float = 1.0
    sample_rate_hz: float = 2500.0
    signature_id: int = 0
    # framing / filterbank
    frame_len_s: float = 0.045
    overlap_s: float = 0.010
    window: str = "hamming"
    n_dft: int = 0                # 0 = resolve automatically
    num_filters: int = 20
    f_max_hz: float = 200.0
    # training
    hidden_dim: int = 20
    epochs: int = 5
    batch_size: int = 16
    learning_rate: float = 1e-3
    # experiment protocol
    repetitions: int = 10
    train_fraction: float = 0.75
    architecture: str = "bilstm"
    # global
    seed: int = 0
    offset_s: float = 0.0

    def frame_config(self) -> FrameConfig:
        try:
            return FrameConfig(
                frame_len_s=self.frame_len_s,
                overlap_s=self.overlap_s,
                window=self.window,
                n_dft=self.n_dft if self.n_dft > 0 else None,
            )
        except DataError as exc:
            raise ConfigError(str(exc)) from None

    def synth_spec(self) -> SynthSpec:
        try:
            return SynthSpec(
                n_channels=self.n_channels,
                duration_s=self.duration_s,
                error_fraction=self.error_fraction,
                class_separation=self.class_separation,
                seed=self.seed,
                sample_rate_hz=self.sample_rate_hz,
                signature_id=self.signature_id,
            )
        except DataError as exc:
            raise ConfigError(str(exc)) from None

    def experiment_config(self, mode: str) -> ExperimentConfig:
        try:
            return ExperimentConfig(
                mode=mode,
                repetitions=self.repetitions,
                train_fraction=self.train_fraction,
                architecture=self.architecture,
                seed=self.seed,
                hidden_dim=self.hidden_dim,
                epochs=self.epochs,
                batch_size=self.batch_size,
                learning_rate=self.learning_rate,
            )
        except DataError as exc:
            raise ConfigError(str(exc)) from None


def load_config(path) -> RunConfig:
    """Parse a key=value file into a RunConfig, rejecting unknown keys and
    values that do not parse as the field's type."""
    spec = {f.name: f.type for f in fields(RunConfig)}
    kwargs = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if key not in spec:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            kwargs[key] = _parse_value(key, value, spec[key], f"{path}:{lineno}")
    return RunConfig(**kwargs)


def _parse_value(key: str, value: str, type_name: str, where: str):
    caster = {"int": int, "float": float, "str": str}.get(type_name)
    if caster is None:
        raise ConfigError(f"{where}: key {key!r} has unsupported type")
    try:
        return caster(value)
    except ValueError:
        raise ConfigError(
            f"{where}: value {value!r} for key {key!r} is not a valid {type_name}"
        ) from None


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            setattr(cfg, f.name, flag)
    return cfg


def _resolved_config(cfg: RunConfig) -> dict:
    return asdict(cfg)


def atomic_write_text(path, text: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _atomic(path, writer) -> None:
    """Run ``writer(tmp_path)`` then rename the temp file over ``path``."""
    tmp = f"{path}.tmp"
    writer(tmp)
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# Subcommands


def _featurize_trials(rec, track, cfg: RunConfig):
    frame_cfg = cfg.frame_config()
    fs = rec.sample_rate_hz
    fb = design_mel_filterbank(
        cfg.num_filters, fs, frame_cfg.resolve_n_dft(fs), f_max=cfg.f_max_hz
    )
    trials = segment_trials(rec, track, cfg.offset_s)
    return [featurize_trial(t, fs, frame_cfg, fb) for t in trials]


def cmd_synth(cfg: RunConfig, args) -> str:
    rec, track = synth_dataset(cfg.synth_spec())
    _atomic(args.out_eeg, lambda p: save_recording(rec, p))
    _atomic(args.out_ann, lambda p: save_annotations(track, p))
    return (
        f"synth: wrote {rec.n_channels} channels x {rec.n_samples} samples to "
        f"{args.out_eeg}, {len(track)} events to {args.out_ann}"
    )


def cmd_featurize(cfg: RunConfig, args) -> str:
    rec = load_recording(args.eeg)
    track = load_annotations(args.ann)
    features = _featurize_trials(rec, track, cfg)
    _atomic(args.out, lambda p: save_features(features, p))
    n_err = sum(1 for f in features if f.label == "ERR")
    return (
        f"featurize: {len(features)} trials ({n_err} ERR) from {args.eeg} "
        f"-> {args.out}"
    )


def cmd_train(cfg: RunConfig, args) -> str:
    features = load_features(args.features)
    clf = SequenceClassifier(
        architecture=cfg.architecture,
        hidden_dim=cfg.hidden_dim,
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate,
        seed=cfg.seed,
        normalize=True,
    )
    clf.fit(
        np.stack([f.matrix for f in features]),
        np.array([f.label_index for f in features]),
    )
    _atomic(
        args.out,
        lambda p: save_checkpoint(clf.model_, p, normalizer=clf.normalizer_, seed=cfg.seed),
    )
    return (
        f"train: {cfg.architecture} on {len(features)} trials, "
        f"final loss {clf.history_[-1]:.4f} -> {args.out}"
    )


def _write_report(report, out_path) -> None:
    atomic_write_text(out_path, report_to_json(report))


def cmd_intra(cfg: RunConfig, args) -> str:
    rec = load_recording(args.eeg)
    track = load_annotations(args.ann)
    features = _featurize_trials(rec, track, cfg)
    report = run_intra(features, cfg.experiment_config("intra"))
    report.config["resolved_run_config"] = _resolved_config(cfg)
    _write_report(report, args.out)
    agg = report.aggregates["accuracy"]
    return f"intra: mean accuracy {agg['mean']:.4f} (std {agg['std']:.4f}) -> {args.out}"


def cmd_inter(cfg: RunConfig, args) -> str:
    train_rec = load_recording(args.train_eeg)
    train_track = load_annotations(args.train_ann)
    test_rec = load_recording(args.test_eeg)
    test_track = load_annotations(args.test_ann)
    train_features = _featurize_trials(train_rec, train_track, cfg)
    test_features = _featurize_trials(test_rec, test_track, cfg)
    report = run_inter(train_features, test_features, cfg.experiment_config("inter"))
    report.config["resolved_run_config"] = _resolved_config(cfg)
    _write_report(report, args.out)
    agg = report.aggregates["accuracy"]
    return f"inter: mean accuracy {agg['mean']:.4f} (std {agg['std']:.4f}) -> {args.out}"


def cmd_compare(cfg: RunConfig, args) -> str:
    rec = load_recording(args.eeg)
    track = load_annotations(args.ann)
    features = _featurize_trials(rec, track, cfg)
    table = compare_architectures(features, cfg.experiment_config("intra"))
    doc = {
        "tool_version": __version__,
        "resolved_run_config": _resolved_config(cfg),
        "architectures": {
            arch: json.loads(report_to_json(rep)) for arch, rep in table.items()
        },
    }
    atomic_write_text(args.out, json.dumps(doc, indent=2) + "\n")
    summary = "; ".join(
        f"{arch}={rep.aggregates['accuracy']['mean']:.4f}" for arch, rep in table.items()
    )
    if args.summary:
        text = "".join(
            f"== {arch}\n{report_summary(rep)}" for arch, rep in table.items()
        )
        atomic_write_text(args.summary, text)
    return f"compare: mean accuracy {summary} -> {args.out}"


def cmd_gradcheck(cfg: RunConfig, args) -> str:
    rng = np.random.default_rng(cfg.seed)
    results = {}
    for arch in ("bilstm", "lstm", "gru"):
        worst = 0.0
        for i in range(args.instances):
            model = model_from_architecture(
                arch, hidden_dim=3, seed=int(rng.integers(2**63)), input_dim=5
            )
            sample = SeqSample(rng.standard_normal((4, 5)), int(rng.integers(2)))
            worst = max(worst, grad_check(model, sample, eps=args.eps))
        results[arch] = worst
    doc = {
        "tool_version": __version__,
        "eps": args.eps,
        "instances": args.instances,
        "max_relative_error": results,
        "threshold": 1e-4,
        "passed": all(v < 1e-4 for v in results.values()),
    }
    if args.out:
        atomic_write_text(args.out, json.dumps(doc, indent=2) + "\n")
    summary = ", ".join(f"{a}={v:.3e}" for a, v in results.items())
    if not doc["passed"]:
        raise TrainingDivergedError(f"gradient check failed: {summary}")
    return f"gradcheck: max relative error {summary}"


def cmd_inspect_filterbank(cfg: RunConfig, args) -> str:
    frame_cfg = cfg.frame_config()
    fs = cfg.sample_rate_hz
    fb = design_mel_filterbank(
        cfg.num_filters, fs, frame_cfg.resolve_n_dft(fs), f_max=cfg.f_max_hz
    )
    _atomic(args.out, lambda p: filterbank_to_csv(fb, p))
    return (
        f"inspect-filterbank: {fb.num_filters} filters over "
        f"[0, {fb.f_max_hz}] Hz, centers at bins {fb.bin_centers.tolist()} -> {args.out}"
    )


# ---------------------------------------------------------------------------
# Argument parsing


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--seed", type=int, help="master seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eegerr",
        description="EEG trial classification pipeline (batch, fully seeded)",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic labeled dataset")
    _add_config_flags(p)
    p.add_argument("--spec", help="key=value synthesis spec file (alias of --config)")
    p.add_argument("--out-eeg", required=True)
    p.add_argument("--out-ann", required=True)
    p.add_argument("--n-channels", dest="n_channels", type=int)
    p.add_argument("--duration-s", dest="duration_s", type=float)
    p.add_argument("--error-fraction", dest="error_fraction", type=float)
    p.add_argument("--class-separation", dest="class_separation", type=float)
    p.add_argument("--sample-rate-hz", dest="sample_rate_hz", type=float)
    p.add_argument("--signature-id", dest="signature_id", type=int)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("featurize", help="segment trials and write feature CSV")
    _add_config_flags(p)
    p.add_argument("--eeg", required=True)
    p.add_argument("--ann", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--offset-s", dest="offset_s", type=float)
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("train", help="train one classifier on a feature CSV")
    _add_config_flags(p)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--arch", dest="architecture", choices=["bilstm", "lstm", "gru"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--hidden-dim", dest="hidden_dim", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("intra", help="repeated same-subject evaluation")
    _add_config_flags(p)
    p.add_argument("--eeg", required=True)
    p.add_argument("--ann", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--offset-s", dest="offset_s", type=float)
    p.add_argument("--arch", dest="architecture", choices=["bilstm", "lstm", "gru"])
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--epochs", type=int)
    p.set_defaults(func=cmd_intra)

    p = sub.add_parser("inter", help="cross-subject evaluation")
    _add_config_flags(p)
    p.add_argument("--train-eeg", required=True)
    p.add_argument("--train-ann", required=True)
    p.add_argument("--test-eeg", required=True)
    p.add_argument("--test-ann", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--offset-s", dest="offset_s", type=float)
    p.add_argument("--arch", dest="architecture", choices=["bilstm", "lstm", "gru"])
    p.add_argument("--repetitions", type=int)
    p.add_argument("--epochs", type=int)
    p.set_defaults(func=cmd_inter)

    p = sub.add_parser("compare", help="run all architectures on shared splits")
    _add_config_flags(p)
    p.add_argument("--eeg", required=True)
    p.add_argument("--ann", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--summary", help="optional plain-text summary table path")
    p.add_argument("--offset-s", dest="offset_s", type=float)
    p.add_argument("--train-fraction", dest="train_fraction", type=float)
    p.add_argument("--repetitions", type=int)
    p.add_argument("--epochs", type=int)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    _add_config_flags(p)
    p.add_argument("--out", help="optional JSON result path")
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--eps", type=float, default=1e-5)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("inspect-filterbank", help="dump mel filter weights as CSV")
    _add_config_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--sample-rate-hz", dest="sample_rate_hz", type=float)
    p.set_defaults(func=cmd_inspect_filterbank)

    return parser


def _load_effective_config(args: argparse.Namespace) -> RunConfig:
    path = getattr(args, "config", None) or getattr(args, "spec", None)
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"config file {path} does not exist")
        cfg = load_config(path)
    else:
        cfg = RunConfig()
    cfg = _apply_overrides(cfg, args)
    if cfg.seed < 0:
        raise ConfigError(f"seed must be a non-negative integer, got {cfg.seed}")
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_effective_config(args)
        summary = args.func(cfg, args)
    except ConfigError as exc:
        print(f"eegerr: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TrainingDivergedError as exc:
        print(f"eegerr: numerical divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (DataError, OSError) as exc:
        print(f"eegerr: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
