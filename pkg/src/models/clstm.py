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
from nn.lstm import lstm_backward, lstm_forward

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClstmConfig:
    width: int = 5
    filters: int = 200
    hidden: tuple[int, ...] = (100, 100)
    dropout: float = 0.6
    masked_last_state: bool = False  # 取最后一个覆盖真实词的窗口处的状态

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.width < 1 or self.filters < 1:
            raise BadConfig("filter width and count must be >= 1")
        if not self.hidden or min(self.hidden) < 1:
            raise BadConfig(f"LSTM hidden sizes must be >= 1, got {self.hidden}")
        check_dropout([self.dropout])


@dataclass
class ClstmModel(SequenceClassifier):
    """一层时间卷积（不池化）接堆叠 LSTM，用最后的状态分类。"""

    kind: ClassVar[str] = "clstm"

    cfg: ClstmConfig = field(default_factory=ClstmConfig)

    @property
    def min_length(self) -> int:
        return self.cfg.width

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
        z = apply(layers.conv1d_forward, layers.conv1d_backward, omega, P["conv.W"], P["conv.b"])
        a = apply(layers.relu_forward, layers.relu_backward, z)
        h = apply(layers.swap_time_forward, layers.swap_time_backward, a)  # (B, T_out, F)
        for j in range(len(self.cfg.hidden)):
            h = apply(lstm_forward, lstm_backward, h, P[f"lstm{j}.W"], P[f"lstm{j}.U"], P[f"lstm{j}.b"])
        B, T_out = h.value.shape[0], h.value.shape[1]
        if self.cfg.masked_last_state and n_valid is not None:
            idx = layers.valid_windows(n_valid, T_out) - 1
            idx = np.maximum(idx, 0)
        else:
            idx = np.full(B, T_out - 1, dtype=np.int64)
        last = apply(layers.take_time_forward, layers.take_time_backward, h, idx=idx)
        last = apply(
            layers.dropout_forward,
            layers.dropout_backward,
            last,
            rate=self.cfg.dropout,
            rng=rng,
            training=training,
        )
        return apply(layers.dense_forward, layers.dense_backward, last, P["out.W"], P["out.b"], name="logits")


def clstm_param_count(C: int, D: int, cfg: ClstmConfig) -> int:
    """F (w·D + 1) + Σ_j 4H_j (in_j + H_j + 1) + (H_last·C + C)，不含词向量表。"""
    total = cfg.filters * (cfg.width * D + 1)
    in_dim = cfg.filters
    for H in cfg.hidden:
        total += 4 * H * (in_dim + H + 1)
        in_dim = H
    return total + in_dim * C + C


def build_clstm(
    C: int,
    D: int,
    table: EmbeddingTable,
    cfg: ClstmConfig | None = None,
    *,
    seed: int = 0,
    dtype: str | np.dtype = "float32",
    train_embedding: bool = True,
) -> ClstmModel:
    cfg = cfg or ClstmConfig()
    if C < 2:
        raise BadConfig(f"need at least 2 classes, got {C}")
    if table.dim != D:
        raise BadConfig(f"embedding dim {table.dim} != D={D}")
    dt = np.dtype(dtype)
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {EMBEDDING: table.rows.astype(dt)}
    params["conv.W"] = init_uniform(rng, (cfg.filters, cfg.width, D), cfg.width * D, dt)
    params["conv.b"] = np.zeros(cfg.filters, dtype=dt)
    in_dim = cfg.filters
    for j, H in enumerate(cfg.hidden):
        params[f"lstm{j}.W"] = init_uniform(rng, (4 * H, in_dim), H, dt)
        params[f"lstm{j}.U"] = init_uniform(rng, (4 * H, H), H, dt)
        params[f"lstm{j}.b"] = np.zeros(4 * H, dtype=dt)
        in_dim = H
    params["out.W"] = init_uniform(rng, (C, in_dim), in_dim, dt)
    params["out.b"] = np.zeros(C, dtype=dt)
    model = ClstmModel(
        num_classes=C,
        dim=D,
        params=params,
        train_embedding=train_embedding,
        meta={"init_mode": table.init_mode.value, "seed": int(seed)},
        cfg=cfg,
    )
    logger.info(
        "C-LSTM: C=%d D=%d width=%d filters=%d hidden=%s params=%d",
        C,
        D,
        cfg.width,
        cfg.filters,
        cfg.hidden,
        model.param_count(),
    )
    return model


def forward_clstm(
    model: ClstmModel,
    omega: np.ndarray,
    training: bool = False,
    *,
    rng: np.random.Generator | None = None,
    n_valid: np.ndarray | None = None,
) -> np.ndarray:
    single = np.ndim(omega) == 2
    p = layers.softmax(model.logits_from_omega(omega, n_valid, training=training, rng=rng))
    return p[0] if single else p
