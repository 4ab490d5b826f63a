from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, ClassVar

import numpy as np

from action_words.errors import BadConfig
from encoding.embedding import EmbeddingTable
from models.base import EMBEDDING, SequenceClassifier, check_dropout, init_uniform
from nn import layers
from nn.graph import Node, apply

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TcnnConfig:
    widths: tuple[int, ...] = (3, 4, 5)
    filters: tuple[int, ...] = (200, 200, 200)
    dropout: tuple[float, float] = (0.2, 0.8)  # (concat 之后, fc1 与 fc2 之间)
    hidden: int = 256
    masked_pooling: bool = False  # 跳过只看到填充的窗口

    def __post_init__(self) -> None:
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "filters", tuple(int(f) for f in self.filters))
        object.__setattr__(self, "dropout", tuple(float(r) for r in self.dropout))
        if not self.widths or len(self.widths) != len(self.filters):
            raise BadConfig(f"widths {self.widths} and filters {self.filters} must pair up")
        if min(self.widths) < 1 or min(self.filters) < 1:
            raise BadConfig("filter widths and counts must be >= 1")
        if len(self.dropout) != 2:
            raise BadConfig(f"T-CNN takes two dropout rates, got {self.dropout}")
        check_dropout(self.dropout)
        if self.hidden < 1:
            raise BadConfig(f"hidden size must be >= 1, got {self.hidden}")

    @property
    def concat_dim(self) -> int:
        return sum(self.filters)


@dataclass
class TcnnModel(SequenceClassifier):
    """并行时间卷积 -> ReLU -> 1-max 池化 -> concat -> 两层全连接。"""

    kind: ClassVar[str] = "tcnn"

    cfg: TcnnConfig = field(default_factory=TcnnConfig)

    @property
    def min_length(self) -> int:
        return max(self.cfg.widths)

    def config_dict(self) -> dict[str, Any]:
        return asdict(self.cfg)

    def logits_node(
        self,
        omega: Node,
        P: dict[str, Node],
        n_valid: np.ndarray | None,
        *,
        training: bool,
        rng: np.random.Generator | None,
    ) -> Node:
        r1, r2 = self.cfg.dropout
        pooled = []
        for i in range(len(self.cfg.widths)):
            z = apply(
                layers.conv1d_forward, layers.conv1d_backward, omega, P[f"conv{i}.W"], P[f"conv{i}.b"]
            )
            a = apply(layers.relu_forward, layers.relu_backward, z)
            mask = None
            if self.cfg.masked_pooling and n_valid is not None:
                mask = layers.valid_windows(n_valid, a.value.shape[-1])
            pooled.append(
                apply(layers.global_max_pool_forward, layers.global_max_pool_backward, a, n_valid=mask)
            )
        v = apply(layers.concat_forward, layers.concat_backward, *pooled)
        v = apply(layers.dropout_forward, layers.dropout_backward, v, rate=r1, rng=rng, training=training)
        h = apply(layers.dense_forward, layers.dense_backward, v, P["fc1.W"], P["fc1.b"])
        h = apply(layers.relu_forward, layers.relu_backward, h)
        h = apply(layers.dropout_forward, layers.dropout_backward, h, rate=r2, rng=rng, training=training)
        return apply(layers.dense_forward, layers.dense_backward, h, P["fc2.W"], P["fc2.b"], name="logits")


def tcnn_param_count(C: int, D: int, cfg: TcnnConfig) -> int:
    """Σ F_l (d_l·D + 1) + (v·h + h) + (h·C + C)，不含词向量表。"""
    conv = sum(f * (d * D + 1) for d, f in zip(cfg.widths, cfg.filters))
    return conv + cfg.concat_dim * cfg.hidden + cfg.hidden + cfg.hidden * C + C


def build_tcnn(
    C: int,
    D: int,
    table: EmbeddingTable,
    cfg: TcnnConfig | None = None,
    *,
    seed: int = 0,
    dtype: str | np.dtype = "float32",
    train_embedding: bool = True,
) -> TcnnModel:
    cfg = cfg or TcnnConfig()
    if C < 2:
        raise BadConfig(f"need at least 2 classes, got {C}")
    if table.dim != D:
        raise BadConfig(f"embedding dim {table.dim} != D={D}")
    dt = np.dtype(dtype)
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {EMBEDDING: table.rows.astype(dt)}
    for i, (d, f) in enumerate(zip(cfg.widths, cfg.filters)):
        params[f"conv{i}.W"] = init_uniform(rng, (f, d, D), d * D, dt)
        params[f"conv{i}.b"] = np.zeros(f, dtype=dt)
    params["fc1.W"] = init_uniform(rng, (cfg.hidden, cfg.concat_dim), cfg.concat_dim, dt)
    params["fc1.b"] = np.zeros(cfg.hidden, dtype=dt)
    params["fc2.W"] = init_uniform(rng, (C, cfg.hidden), cfg.hidden, dt)
    params["fc2.b"] = np.zeros(C, dtype=dt)
    model = TcnnModel(
        num_classes=C,
        dim=D,
        params=params,
        train_embedding=train_embedding,
        meta={"init_mode": table.init_mode.value, "seed": int(seed)},
        cfg=cfg,
    )
    logger.info(
        "T-CNN: C=%d D=%d widths=%s filters=%s hidden=%d params=%d",
        C,
        D,
        cfg.widths,
        cfg.filters,
        cfg.hidden,
        model.param_count(),
    )
    return model


def forward_tcnn(
    model: TcnnModel,
    omega: np.ndarray,
    training: bool = False,
    *,
    rng: np.random.Generator | None = None,
    n_valid: np.ndarray | None = None,
) -> np.ndarray:
    """类别概率：Ω (D, T) -> (C,)，或批量 (B, D, T) -> (B, C)。"""
    single = np.ndim(omega) == 2
    logits = model.logits_from_omega(omega, n_valid, training=training, rng=rng)
    p = layers.softmax(logits)
    return p[0] if single else p
