"""
运行配置：代码默认值 < YAML 配置文件 < 命令行参数。

YAML 文件每个阶段一节（见 configs/base.yaml）；`RunConfig` 是 CLI 使用的扁平、已校验视图。
"""

from __future__ import annotations

import hashlib
import logging
from collections.abc import Mapping
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from action_words.errors import UsageError
from encoding.assign import EncodingMode, SaConfig
from encoding.embedding import InitMode
from features.flow import RatioMode
from features.fusion import FusionConfig

logger = logging.getLogger(__name__)

DEFAULT_CONFIG = Path("configs/base.yaml")

SEED_LABELS = ("synth", "features", "codebook", "embedding", "init", "train")

# (yaml 节, 键) -> RunConfig 字段
_PREFIXED_SECTIONS = ("tcnn", "clstm", "synth")
_PLAIN_SECTIONS = ("runtime", "features", "codebook", "encoding", "train")


def derive_seed(root: int, label: str) -> int:
    """sha256("<root>:<label>") 的前 8 字节（小端）。"""
    digest = hashlib.sha256(f"{int(root)}:{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    # runtime
    seed: int = 0
    threads: int = Field(1, ge=1)

    # features
    ratio: float = Field(0.5, ge=0.0, le=1.0)
    fused_dim: int = Field(512, ge=1)
    pca_dim: int | None = Field(None, ge=1)
    ratio_mode: RatioMode = RatioMode.HALF_MU_UNDER

    # codebook
    K: int = Field(256, ge=1)
    max_iter: int = Field(100, ge=1)
    rel_tol: float = Field(1e-6, ge=0.0)

    # encoding
    mode: EncodingMode = EncodingMode.HA
    init: InitMode = InitMode.CODEWORD
    k: int = Field(5, ge=1)
    beta: float | None = Field(None, gt=0.0)

    # model
    model: Literal["tcnn", "clstm"] = "tcnn"
    tcnn_widths: tuple[int, ...] = (3, 4, 5)
    tcnn_filters: tuple[int, ...] = (200, 200, 200)
    tcnn_dropout: tuple[float, float] = (0.2, 0.8)
    tcnn_hidden: int = Field(256, ge=1)
    tcnn_masked_pooling: bool = False
    clstm_width: int = Field(5, ge=1)
    clstm_filters: int = Field(200, ge=1)
    clstm_hidden: tuple[int, ...] = (100, 100)
    clstm_dropout: float = 0.6
    clstm_masked_last_state: bool = False

    # train
    batch_size: int = Field(64, ge=1)
    epochs: int = Field(100, ge=1)
    lr: float = Field(1e-4, gt=0.0)
    l_max: int | None = Field(None, ge=1)
    train_embedding: bool = True
    shard_size: int = Field(16, ge=1)

    # synth
    synth_classes: int = Field(8, ge=1)
    synth_vocab: int = Field(50, ge=2)
    synth_mean_length: float = Field(32.0, gt=0.0)
    synth_min_length: int = Field(4, ge=1)
    synth_train_per_class: int = Field(200, ge=1)
    synth_test_per_class: int = Field(50, ge=1)
    synth_mix: float = Field(0.1, gt=0.0, le=1.0)
    synth_dim: int = Field(16, ge=1)  # 真值词序列的词向量维数
    synth_feature_dim: int = Field(16, ge=1)
    synth_feature_noise: float = Field(0.1, ge=0.0)

    @field_validator("tcnn_widths", "tcnn_filters", "clstm_hidden")
    @classmethod
    def _positive_tuple(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if not v or min(v) < 1:
            raise ValueError("needs at least one entry, all >= 1")
        return v

    @field_validator("tcnn_dropout")
    @classmethod
    def _dropout_pair(cls, v: tuple[float, float]) -> tuple[float, float]:
        if not all(0.0 <= r < 1.0 for r in v):
            raise ValueError("dropout rates must be in [0, 1)")
        return v

    @field_validator("clstm_dropout")
    @classmethod
    def _dropout(cls, v: float) -> float:
        if not 0.0 <= v < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")
        return v

    @model_validator(mode="after")
    def _cross_checks(self) -> RunConfig:
        if len(self.tcnn_widths) != len(self.tcnn_filters):
            raise ValueError("tcnn_widths and tcnn_filters must have the same length")
        if self.mode is EncodingMode.HA and self.init is InitMode.DIRECT:
            raise ValueError("hard assignment uses init 'codeword' or 'random'")
        if self.mode is not EncodingMode.HA and self.init is not InitMode.DIRECT:
            raise ValueError(f"{self.mode.value} encoding needs init 'direct'")
        if self.mode is EncodingMode.SA and self.k > self.K:
            raise ValueError(f"k={self.k} exceeds K={self.K}")
        if self.synth_mean_length < self.synth_min_length:
            raise ValueError("synth_mean_length must be >= synth_min_length")
        if self.l_max is not None:
            widest = max(self.tcnn_widths) if self.model == "tcnn" else self.clstm_width
            if self.l_max < widest:
                raise ValueError(f"l_max={self.l_max} is shorter than the widest filter ({widest})")
        return self

    # ---- 各模块参数对象 ----
    def fusion_config(self) -> FusionConfig:
        return FusionConfig(ratio=self.ratio, fused_dim=self.fused_dim)

    def sa_config(self) -> SaConfig:
        return SaConfig(k=self.k, beta=self.beta)

    def seed_for(self, label: str) -> int:
        if label not in SEED_LABELS:
            raise KeyError(label)
        return derive_seed(self.seed, label)

    def echo(self) -> dict[str, Any]:
        """只含可调参数（不含路径与线程数），可写入需逐字节复现的输出。"""
        return self.model_dump(mode="json", exclude={"threads"})


def _flatten_yaml(data: Mapping[str, Any]) -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for section, body in data.items():
        if section == "model" and not isinstance(body, Mapping):
            flat["model"] = body
            continue
        if not isinstance(body, Mapping):
            raise UsageError(f"config section '{section}' must be a mapping")
        if section in _PLAIN_SECTIONS:
            flat.update(body)
        elif section in _PREFIXED_SECTIONS:
            flat.update({f"{section}_{k}": v for k, v in body.items()})
        else:
            raise UsageError(f"unknown config section '{section}'")
    return flat


def load_config_file(path: Path | None) -> dict[str, Any]:
    """展平后的 YAML 配置；文件不存在时返回空。"""
    if path is None or not Path(path).exists():
        return {}
    try:
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise UsageError(f"{path}: {e}") from e
    if not isinstance(data, Mapping):
        raise UsageError(f"{path}: top level must be a mapping")
    return _flatten_yaml(data)


def build_run_config(
    config_path: Path | None = DEFAULT_CONFIG, overrides: Mapping[str, Any] | None = None
) -> RunConfig:
    """默认值 < 文件 < overrides（命令行）；值为 None 的 override 忽略。"""
    settings = load_config_file(config_path)
    settings.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        cfg = RunConfig(**settings)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(p) for p in first.get("loc", ())) or "config"
        raise UsageError(f"invalid {where}: {first.get('msg')}") from e
    logger.debug("run config: %s", cfg.echo())
    return cfg
