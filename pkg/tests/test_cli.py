from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from action_words.cli import run

SMALL_CONFIG = """\
runtime:
  seed: 3
codebook:
  K: 8
  max_iter: 10
tcnn:
  widths: [2, 3]
  filters: [6, 6]
  hidden: 8
  dropout: [0.1, 0.2]
clstm:
  width: 2
  filters: 4
  hidden: [4]
train:
  batch_size: 16
  epochs: 2
  lr: 0.001
  shard_size: 4
synth:
  classes: 3
  vocab: 8
  mean_length: 8.0
  min_length: 3
  train_per_class: 8
  test_per_class: 4
  dim: 4
  feature_dim: 5
"""


@pytest.fixture()
def cfg(tmp_path: Path) -> Path:
    p = tmp_path / "small.yaml"
    p.write_text(SMALL_CONFIG, encoding="utf-8")
    return p


def _ok(argv: list[str]) -> None:
    code = run([str(a) for a in argv])
    assert code == 0, argv


def _error(capsys: pytest.CaptureFixture) -> dict:
    lines = [ln for ln in capsys.readouterr().err.splitlines() if ln.startswith("{")]
    return json.loads(lines[-1])


def _pipeline(root: Path, cfg: Path, *extra: str) -> Path:
    """synth -> train -> eval --curve，返回模型目录。"""
    _ok(["synth", "--out", root / "synth", "--config", cfg])
    _ok(["train", "--data", root / "synth", "--out", root / "model", "--config", cfg, *extra])
    _ok(["eval", "--model", root / "model", "--curve"])
    return root / "model"


def test_synth_train_eval(tmp_path: Path, cfg: Path):
    model = _pipeline(tmp_path, cfg)
    synth = tmp_path / "synth"
    for name in ("train.jsonl", "test.jsonl", "stats.json", "synth.json", "sentences_train.jsonl", "embedding.bin"):
        assert (synth / name).exists(), name
    assert json.loads((synth / "stats.json").read_text("utf-8"))["num_classes"] == 3

    history = pd.read_csv(model / "history.csv")
    assert list(history.columns) == ["epoch", "train_loss", "train_acc", "val_acc"]
    assert len(history) == 2

    rep = json.loads((model / "report.json").read_text("utf-8"))
    assert len(rep["curve"]) == 10
    assert rep["curve"]["1.0"] == rep["metrics"]["recognition_accuracy"]
    assert rep["metrics"]["num_test"] == 12
    assert rep["config"]["architecture"] == "tcnn"
    assert "timing" not in rep


def test_runs_are_byte_identical(tmp_path: Path, cfg: Path):
    a = _pipeline(tmp_path / "a", cfg)
    b = _pipeline(tmp_path / "b", cfg)
    assert (a / "model.bin").read_bytes() == (b / "model.bin").read_bytes()
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


def test_thread_count_does_not_change_outputs(tmp_path: Path, cfg: Path):
    one = _pipeline(tmp_path / "one", cfg, "--threads", "1")
    four = _pipeline(tmp_path / "four", cfg, "--threads", "4")
    assert (one / "model.bin").read_bytes() == (four / "model.bin").read_bytes()
    assert (one / "report.json").read_bytes() == (four / "report.json").read_bytes()


def test_unknown_flag_exits_2_without_writing(tmp_path: Path, cfg: Path, capsys):
    out = tmp_path / "synth"
    assert run(["synth", "--out", str(out), "--config", str(cfg), "--bogus", "1"]) == 2
    assert not out.exists()
    err = _error(capsys)
    assert err["exit_code"] == 2 and err["error"] == "UsageError"


def test_invalid_config_value_exits_2(tmp_path: Path, cfg: Path, capsys):
    assert run(["synth", "--out", str(tmp_path / "s"), "--config", str(cfg), "--classes", "0"]) == 2
    assert _error(capsys)["exit_code"] == 2


def test_missing_model_exits_3(tmp_path: Path, capsys):
    assert run(["eval", "--model", str(tmp_path / "nope.bin")]) == 3
    err = _error(capsys)
    assert err == {"error": "FormatError", "exit_code": 3, "message": err["message"]}
    assert "nope.bin" in err["message"]


@pytest.mark.parametrize("ids", ["1,2,999", "1,-1,2"])
def test_predict_unknown_word_id_exits_3(tmp_path: Path, cfg: Path, capsys, ids: str):
    model = _pipeline(tmp_path, cfg)
    capsys.readouterr()
    assert run(["predict", "--model", str(model), "--ids", ids]) == 3
    err = _error(capsys)
    assert err["error"] == "UnknownWordId" and err["exit_code"] == 3


def test_ingest_bad_stream_exits_3(tmp_path: Path, cfg: Path, capsys):
    synth = tmp_path / "synth"
    _ok(["synth", "--out", synth, "--config", cfg])
    manifest = synth / "train.jsonl"
    rows = [json.loads(ln) for ln in manifest.read_text("utf-8").splitlines() if ln.strip()]
    rows[0]["stream"] = "rgb"
    manifest.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    capsys.readouterr()
    out = tmp_path / "ing"
    assert run(["ingest", "--train", str(manifest), "--test", str(synth / "test.jsonl"), "--out", str(out)]) == 3
    err = _error(capsys)
    assert err["error"] == "FormatError" and "rgb" in err["message"]
    assert not out.exists()


def test_l_max_shorter_than_filter_exits_2(tmp_path: Path, cfg: Path, capsys):
    _ok(["synth", "--out", tmp_path / "synth", "--config", cfg])
    capsys.readouterr()
    out = tmp_path / "m"
    # 最宽卷积核为 3
    argv = ["train", "--data", tmp_path / "synth", "--out", out, "--l-max", "2", "--config", cfg]
    assert run([str(a) for a in argv]) == 2
    assert _error(capsys)["exit_code"] == 2
    assert not out.exists()


def test_non_finite_flow_exits_4(tmp_path: Path, capsys):
    flow = tmp_path / "flow.txt"
    flow.write_text("1.0\nnan\n", encoding="utf-8")
    assert run(["ratio", "--flow", str(flow)]) == 4
    assert _error(capsys)["error"] == "NonFiniteInput"


def test_codebook_encode_train_predict(tmp_path: Path, cfg: Path, capsys):
    _ok(["synth", "--out", tmp_path / "synth", "--config", cfg])
    _ok(["codebook", "--data", tmp_path / "synth", "--out", tmp_path / "cb.bin", "--size", "6", "--config", cfg])
    capsys.readouterr()

    # HA 编码必须给出码本
    assert run(["encode", "--data", str(tmp_path / "synth"), "--out", str(tmp_path / "x"), "--config", str(cfg)]) == 2

    _ok(["encode", "--data", tmp_path / "synth", "--out", tmp_path / "ha", "--codebook", tmp_path / "cb.bin", "--config", cfg])
    meta = json.loads((tmp_path / "ha" / "encoding.json").read_text("utf-8"))
    assert (meta["mode"], meta["vocab_size"], meta["dim"]) == ("ha", 7, 5)

    _ok(["train", "--data", tmp_path / "ha", "--out", tmp_path / "m", "--model", "clstm", "--masked", "--config", cfg])
    capsys.readouterr()
    _ok(["predict", "--model", tmp_path / "m", "--ids", "1,2,3,4"])
    single = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert 0 <= single["predicted"] < 3
    assert sum(single["probabilities"]) == pytest.approx(1.0, abs=1e-5)

    _ok(["predict", "--model", tmp_path / "m" / "model.bin", "--sentences", tmp_path / "ha" / "sentences_test.jsonl", "--fraction", "0.5", "--out", tmp_path / "pred.csv"])
    df = pd.read_csv(tmp_path / "pred.csv")
    assert len(df) == 12
    assert list(df.columns[:3]) == ["video_id", "label", "predicted"]
    assert np.allclose(df[["p_0", "p_1", "p_2"]].sum(axis=1), 1.0, atol=1e-5)

    assert run(["predict", "--model", str(tmp_path / "m")]) == 2


@pytest.mark.parametrize("mode", ["sa", "da"])
def test_encode_direct_modes(tmp_path: Path, cfg: Path, mode: str):
    _ok(["synth", "--out", tmp_path / "synth", "--config", cfg])
    argv = ["encode", "--data", tmp_path / "synth", "--out", tmp_path / mode, "--mode", mode, "--init", "direct", "--config", cfg]
    if mode == "sa":
        _ok(["codebook", "--data", tmp_path / "synth", "--out", tmp_path / "cb.bin", "--config", cfg])
        argv += ["--codebook", tmp_path / "cb.bin", "--k", "3"]
    _ok(argv)
    meta = json.loads((tmp_path / mode / "encoding.json").read_text("utf-8"))
    assert meta["mode"] == mode and meta["init_mode"] == "direct"
    assert meta["dim"] == 5


def test_ingest_pca_ratio_fuse(tmp_path: Path, cfg: Path, capsys):
    synth = tmp_path / "synth"
    _ok(["synth", "--out", synth, "--config", cfg])
    _ok(["ingest", "--train", synth / "train.jsonl", "--test", synth / "test.jsonl", "--out", tmp_path / "ing"])
    stats = json.loads((tmp_path / "ing" / "stats.json").read_text("utf-8"))
    assert stats["num_classes"] == 3 and stats["dim"] == 5

    _ok(["pca", "--data", synth, "--out", tmp_path / "pca.bin", "--dim", "3", "--project", tmp_path / "proj", "--config", cfg])
    assert json.loads((tmp_path / "proj" / "stats.json").read_text("utf-8"))["dim"] == 3

    flow = tmp_path / "flow.txt"
    # μ_all = 26, μ_under = 4/3, 阈值 2/3：8 帧中 4 帧在阈值之上
    flow.write_text("\n".join(["0.0"] * 4 + ["4.0", "4.0", "100.0", "100.0"]) + "\n", encoding="utf-8")
    _ok(["ratio", "--flow", flow, "--out", tmp_path / "ratio.json"])
    r = json.loads((tmp_path / "ratio.json").read_text("utf-8"))
    assert r["ratio"] == 0.5 and r["num_frames"] == 8

    capsys.readouterr()
    _ok(["fuse", "--temporal", synth, "--spatial", tmp_path / "proj", "--out", tmp_path / "fused", "--dim", "4", "--ratio", "0.5", "--config", cfg])
    fused = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert (fused["n_temporal"], fused["n_spatial"], fused["dim"]) == (2, 2, 4)
    assert (tmp_path / "fused" / "pca_temporal.bin").exists()

    _ok(["fuse", "--temporal", synth, "--spatial", synth, "--out", tmp_path / "fused2", "--dim", "4", "--ratio-file", tmp_path / "ratio.json", "--config", cfg])
    assert (tmp_path / "fused2" / "train.jsonl").exists()


def test_report_convert_and_sweep(tmp_path: Path, cfg: Path):
    model = _pipeline(tmp_path, cfg)
    _ok(["report", "-i", model / "report.json", "--out", tmp_path / "r.csv"])
    df = pd.read_csv(tmp_path / "r.csv")
    assert list(df.columns) == ["metric", "value"]
    assert (df["metric"].str.startswith("curve@")).sum() == 10

    _ok(["eval", "--model", model, "--out", tmp_path / "again.json"])
    _ok(["report", "-i", model / "report.json", "-i", tmp_path / "again.json", "--out", tmp_path / "sweep.csv"])
    sweep = pd.read_csv(tmp_path / "sweep.csv")
    assert list(sweep["run"]) == ["report", "again"]
    assert sweep["recognition_accuracy"].nunique() == 1
