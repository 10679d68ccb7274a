import json

import pytest

from eegerr.cli import EXIT_CONFIG, EXIT_DATA, RunConfig, load_config, main
from eegerr.errors import ConfigError
from eegerr.featurize import load_features
from eegerr.io import load_annotations, load_recording
from eegerr.nn import load_checkpoint


def run(argv):
    return main([str(a) for a in argv])


@pytest.fixture()
def small_dataset(tmp_path):
    eeg = tmp_path / "r.eegc"
    ann = tmp_path / "a.csv"
    code = run(
        [
            "synth",
            "--out-eeg", eeg,
            "--out-ann", ann,
            "--n-channels", 3,
            "--duration-s", 40,
            "--error-fraction", 0.5,
            "--class-separation", 2.5,
            "--sample-rate-hz", 500,
            "--seed", 5,
        ]
    )
    assert code == 0
    return eeg, ann


# ---------------------------------------------------------------------------
# Config files


def test_load_config_defaults_and_overrides(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("# comment\nepochs=3\nlearning_rate=0.01\narchitecture=gru\n")
    cfg = load_config(path)
    assert cfg.epochs == 3
    assert cfg.learning_rate == 0.01
    assert cfg.architecture == "gru"
    assert cfg.repetitions == 10  # untouched default


def test_load_config_unknown_key(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("nonsense=1\n")
    with pytest.raises(ConfigError, match="unknown key"):
        load_config(path)


def test_load_config_type_mismatch_names_key(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("epochs=zero\n")
    with pytest.raises(ConfigError, match="epochs"):
        load_config(path)


def test_empty_config_gives_defaults(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("")
    assert load_config(path) == RunConfig()


def test_missing_config_file_exits_config(tmp_path):
    code = run(
        ["synth", "--config", tmp_path / "nope.cfg",
         "--out-eeg", tmp_path / "r.eegc", "--out-ann", tmp_path / "a.csv"]
    )
    assert code == EXIT_CONFIG


# ---------------------------------------------------------------------------
# Commands


def test_synth_outputs_loadable(small_dataset):
    eeg, ann = small_dataset
    rec = load_recording(eeg)
    track = load_annotations(ann)
    assert rec.n_channels == 3
    assert rec.duration_s == 40.0
    assert len(track) >= 4


def test_synth_with_spec_file(tmp_path):
    spec = tmp_path / "s.cfg"
    spec.write_text(
        "n_channels=2\nduration_s=12\nerror_fraction=0.5\n"
        "sample_rate_hz=250\nseed=21\n"
    )
    eeg, ann = tmp_path / "r.eegc", tmp_path / "a.csv"
    assert run(["synth", "--spec", spec, "--out-eeg", eeg, "--out-ann", ann]) == 0
    rec = load_recording(eeg)
    assert rec.n_channels == 2
    assert rec.duration_s == 12.0
    # command-line flags override file values
    eeg2, ann2 = tmp_path / "r2.eegc", tmp_path / "a2.csv"
    assert run(
        ["synth", "--spec", spec, "--n-channels", 4, "--out-eeg", eeg2, "--out-ann", ann2]
    ) == 0
    assert load_recording(eeg2).n_channels == 4


def test_synth_deterministic_bytes(tmp_path):
    args = [
        "synth", "--n-channels", 2, "--duration-s", 10, "--sample-rate-hz", 250,
        "--seed", 9,
    ]
    a_eeg, a_ann = tmp_path / "a.eegc", tmp_path / "a.csv"
    b_eeg, b_ann = tmp_path / "b.eegc", tmp_path / "b.csv"
    assert run(args + ["--out-eeg", a_eeg, "--out-ann", a_ann]) == 0
    assert run(args + ["--out-eeg", b_eeg, "--out-ann", b_ann]) == 0
    assert a_eeg.read_bytes() == b_eeg.read_bytes()
    assert a_ann.read_bytes() == b_ann.read_bytes()


def test_featurize_then_train_checkpoint(small_dataset, tmp_path):
    eeg, ann = small_dataset
    feats_path = tmp_path / "f.csv"
    assert run(["featurize", "--eeg", eeg, "--ann", ann, "--out", feats_path]) == 0
    feats = load_features(feats_path)
    assert len(feats) == 40
    assert {f.label for f in feats} == {"OK", "ERR"}

    ckpt = tmp_path / "model.json"
    assert run(
        ["train", "--features", feats_path, "--out", ckpt, "--epochs", 2,
         "--hidden-dim", 4, "--seed", 3]
    ) == 0
    model, norm = load_checkpoint(ckpt)
    assert model.bidirectional
    assert norm is not None


def test_intra_report_schema_and_determinism(small_dataset, tmp_path):
    eeg, ann = small_dataset
    out1, out2 = tmp_path / "rep1.json", tmp_path / "rep2.json"
    args = [
        "intra", "--eeg", eeg, "--ann", ann,
        "--repetitions", 2, "--epochs", 2, "--seed", 17,
    ]
    assert run(args + ["--out", out1]) == 0
    assert run(args + ["--out", out2]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    doc = json.loads(out1.read_text())
    assert doc["tool_version"]
    assert doc["config"]["repetitions"] == 2
    assert doc["config"]["resolved_run_config"]["seed"] == 17
    assert len(doc["repetitions"]) == 2
    for rep in doc["repetitions"]:
        cm = rep["confusion"]
        total = cm["tp"] + cm["fp"] + cm["fn"] + cm["tn"]
        assert total == len(rep["test_trials"])
        assert set(rep["seeds"]) == {"undersample", "split", "model", "undersample_test"}


def test_inter_command(small_dataset, tmp_path):
    eeg, ann = small_dataset
    eeg2, ann2 = tmp_path / "r2.eegc", tmp_path / "a2.csv"
    assert run(
        ["synth", "--out-eeg", eeg2, "--out-ann", ann2, "--n-channels", 3,
         "--duration-s", 40, "--error-fraction", 0.5, "--class-separation", 2.5,
         "--sample-rate-hz", 500, "--seed", 6]
    ) == 0
    out = tmp_path / "inter.json"
    assert run(
        ["inter", "--train-eeg", eeg, "--train-ann", ann,
         "--test-eeg", eeg2, "--test-ann", ann2,
         "--out", out, "--repetitions", 2, "--epochs", 2]
    ) == 0
    doc = json.loads(out.read_text())
    assert doc["config"]["mode"] == "inter"


def test_compare_command_shares_test_sets(small_dataset, tmp_path):
    eeg, ann = small_dataset
    out = tmp_path / "cmp.json"
    summary = tmp_path / "cmp.txt"
    assert run(
        ["compare", "--eeg", eeg, "--ann", ann, "--out", out,
         "--summary", summary, "--repetitions", 2, "--epochs", 1, "--seed", 4]
    ) == 0
    doc = json.loads(out.read_text())
    assert set(doc["architectures"]) == {"bilstm", "lstm", "gru"}
    rows = doc["architectures"]
    for rep_idx in range(2):
        tests = [
            rows[a]["repetitions"][rep_idx]["test_trials"] for a in rows
        ]
        assert tests[0] == tests[1] == tests[2]
    assert "== bilstm" in summary.read_text()


def test_gradcheck_command(tmp_path):
    out = tmp_path / "gc.json"
    assert run(["gradcheck", "--instances", 2, "--out", out, "--seed", 1]) == 0
    doc = json.loads(out.read_text())
    assert doc["passed"] is True
    assert all(v < 1e-4 for v in doc["max_relative_error"].values())


def test_inspect_filterbank_command(tmp_path):
    out = tmp_path / "fb.csv"
    assert run(["inspect-filterbank", "--out", out]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "filter,bin,weight"
    rows = [ln.split(",") for ln in lines[1:]]
    assert {int(r[0]) for r in rows} == set(range(20))
    weights = [float(r[2]) for r in rows]
    assert max(weights) == 1.0


def test_featurize_missing_file_exits_data(tmp_path):
    code = run(
        ["featurize", "--eeg", tmp_path / "missing.eegc",
         "--ann", tmp_path / "missing.csv", "--out", tmp_path / "f.csv"]
    )
    assert code == EXIT_DATA


def test_intra_bad_train_fraction_exits_config(small_dataset, tmp_path):
    eeg, ann = small_dataset
    code = run(
        ["intra", "--eeg", eeg, "--ann", ann, "--out", tmp_path / "r.json",
         "--train-fraction", 1.5]
    )
    assert code == EXIT_CONFIG


def test_no_leftover_temp_files(small_dataset, tmp_path):
    eeg, ann = small_dataset
    out = tmp_path / "f.csv"
    assert run(["featurize", "--eeg", eeg, "--ann", ann, "--out", out]) == 0
    assert not list(tmp_path.glob("*.tmp"))


def test_negative_seed_exits_config(small_dataset, tmp_path):
    eeg, ann = small_dataset
    code = run(
        ["train", "--features", tmp_path / "nope.csv", "--out", tmp_path / "m.json",
         "--seed", "-5"]
    )
    assert code == EXIT_CONFIG


def test_report_echo_equals_effective_config(small_dataset, tmp_path):
    from dataclasses import asdict

    eeg, ann = small_dataset
    cfg_file = tmp_path / "c.cfg"
    cfg_file.write_text("epochs=2\nrepetitions=2\nhidden_dim=6\n")
    out = tmp_path / "rep.json"
    assert run(
        ["intra", "--eeg", eeg, "--ann", ann, "--config", cfg_file,
         "--out", out, "--seed", "31", "--train-fraction", "0.8"]
    ) == 0
    doc = json.loads(out.read_text())
    expected = asdict(RunConfig(epochs=2, repetitions=2, hidden_dim=6,
                                seed=31, train_fraction=0.8))
    assert doc["config"]["resolved_run_config"] == expected
    assert doc["config"]["epochs"] == 2
    assert doc["config"]["train_fraction"] == 0.8
