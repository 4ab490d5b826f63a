from __future__ import annotations

import hashlib
from pathlib import Path

import pytest

from action_words.config import (
    DEFAULT_CONFIG,
    RunConfig,
    build_run_config,
    derive_seed,
    load_config_file,
)
from action_words.errors import UsageError
from encoding.assign import EncodingMode
from encoding.embedding import InitMode


def _yaml(tmp_path: Path, text: str) -> Path:
    p = tmp_path / "cfg.yaml"
    p.write_text(text, encoding="utf-8")
    return p


def test_precedence_defaults_file_flags(tmp_path: Path):
    p = _yaml(tmp_path, "codebook:\n  K: 64\ntrain:\n  lr: 0.001\n  epochs: 7\n")
    cfg = build_run_config(p, {"epochs": 3, "lr": None})
    assert cfg.K == 64  # file
    assert cfg.lr == 0.001  # file；值为 None 的参数不覆盖
    assert cfg.epochs == 3  # flag
    assert cfg.batch_size == 64  # default


def test_prefixed_sections_and_scalar_model(tmp_path: Path):
    p = _yaml(tmp_path, "model: clstm\nclstm:\n  hidden: [32]\ntcnn:\n  widths: [2, 3]\n  filters: [8, 8]\n")
    cfg = build_run_config(p)
    assert cfg.model == "clstm"
    assert cfg.clstm_hidden == (32,)
    assert cfg.tcnn_widths == (2, 3)


def test_missing_file_means_defaults(tmp_path: Path):
    assert load_config_file(tmp_path / "none.yaml") == {}
    assert build_run_config(tmp_path / "none.yaml") == RunConfig()


def test_base_yaml_matches_defaults(repo_root: Path):
    assert build_run_config(DEFAULT_CONFIG) == RunConfig()


@pytest.mark.parametrize(
    "text",
    [
        "optimizer:\n  lr: 1\n",  # 未知的节
        "train: 5\n",  # 节不是映射
        "train:\n  lr: -1\n",  # 越界
        "train:\n  momentum: 0.9\n",  # 未知的键
        "encoding:\n  mode: sa\n  init: codeword\n",  # SA 需要 direct 初始化
        "tcnn:\n  widths: [3, 4]\n",  # widths 与 filters 长度不一致
        "- a\n- b\n",  # 顶层是列表
        "train: [unclosed\n",  # YAML 语法错误
    ],
)
def test_invalid_config_is_usage_error(tmp_path: Path, text: str):
    with pytest.raises(UsageError):
        build_run_config(_yaml(tmp_path, text))


def test_encoding_combinations():
    assert build_run_config(None, {"mode": "sa", "init": "direct"}).mode is EncodingMode.SA
    assert build_run_config(None, {"init": "random"}).init is InitMode.RANDOM
    with pytest.raises(UsageError):
        build_run_config(None, {"mode": "sa", "init": "direct", "k": 9, "K": 4})


def test_l_max_must_cover_widest_filter():
    assert build_run_config(None, {"l_max": 5}).l_max == 5
    with pytest.raises(UsageError, match="widest filter"):
        build_run_config(None, {"l_max": 4})  # T-CNN 默认宽度 (3, 4, 5)
    with pytest.raises(UsageError):
        build_run_config(None, {"model": "clstm", "clstm_width": 6, "l_max": 5})
    assert build_run_config(None, {"model": "clstm", "l_max": 5}).l_max == 5


def test_derive_seed():
    expected = int.from_bytes(hashlib.sha256(b"7:codebook").digest()[:8], "little")
    assert derive_seed(7, "codebook") == expected
    assert derive_seed(7, "codebook") != derive_seed(7, "train")
    assert derive_seed(7, "train") != derive_seed(8, "train")
    assert 0 <= derive_seed(0, "init") < 2**64


def test_seed_for_known_labels_only():
    cfg = RunConfig(seed=3)
    assert cfg.seed_for("synth") == derive_seed(3, "synth")
    with pytest.raises(KeyError):
        cfg.seed_for("shuffle")


def test_echo_excludes_threads():
    a = RunConfig(threads=1).echo()
    b = RunConfig(threads=8).echo()
    assert "threads" not in a
    assert a == b
    assert a["mode"] == "ha" and a["tcnn_widths"] == [3, 4, 5]
