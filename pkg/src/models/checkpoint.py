from __future__ import annotations

import logging
from pathlib import Path
from typing import Any

import numpy as np

from action_words.errors import FormatError
from aw_data.binary import read_blocks, write_blocks
from models.base import SequenceClassifier
from models.clstm import ClstmConfig, ClstmModel
from models.tcnn import TcnnConfig, TcnnModel

logger = logging.getLogger(__name__)

ARCHITECTURES: dict[str, tuple[type[SequenceClassifier], type]] = {
    TcnnModel.kind: (TcnnModel, TcnnConfig),
    ClstmModel.kind: (ClstmModel, ClstmConfig),
}


def save_checkpoint(
    model: SequenceClassifier, path: str | Path, extra: dict[str, Any] | None = None
) -> Path:
    """
    JSON header (architecture, dims, config, l_max, seed) + 按参数名排序的 float32 参数块。
    `extra` 原样写入 header（例如训练所用的数据目录）。
    """
    order = sorted(model.params)
    header = {
        "kind": "checkpoint",
        "architecture": model.kind,
        "num_classes": model.num_classes,
        "dim": model.dim,
        "l_max": model.l_max,
        "train_embedding": model.train_embedding,
        "config": model.config_dict(),
        "meta": dict(model.meta),
        "extra": dict(extra or {}),
    }
    return write_blocks(path, header, {k: model.params[k] for k in order})


def load_checkpoint(path: str | Path) -> tuple[SequenceClassifier, dict[str, Any]]:
    """返回 (float32 参数的模型, extra)。"""
    header, blocks = read_blocks(path)
    if header.get("kind") != "checkpoint":
        raise FormatError(f"{path}: not a checkpoint (kind={header.get('kind')})")
    arch = header.get("architecture")
    if arch not in ARCHITECTURES:
        raise FormatError(f"{path}: unknown architecture {arch!r}")
    model_cls, cfg_cls = ARCHITECTURES[arch]
    try:
        cfg = cfg_cls(**header["config"])
    except TypeError as e:
        raise FormatError(f"{path}: bad model config ({e})") from e
    params = {k: v.astype(np.float32) for k, v in blocks.items()}
    model = model_cls(
        num_classes=int(header["num_classes"]),
        dim=int(header["dim"]),
        params=params,
        l_max=None if header.get("l_max") is None else int(header["l_max"]),
        train_embedding=bool(header.get("train_embedding", True)),
        meta=dict(header.get("meta", {})),
        cfg=cfg,
    )
    logger.info("loaded %s checkpoint from %s (%d parameters)", arch, path, model.param_count())
    return model, dict(header.get("extra", {}))
