from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any, ClassVar

import numpy as np

from action_words.errors import BadConfig, ShapeMismatch
from encoding.embedding import EmbeddingTable, check_word_ids
from nn import layers
from nn.graph import Node, apply, leaf

EMBEDDING = "embedding"


def init_uniform(
    rng: np.random.Generator, shape: Sequence[int], fan_in: int, dtype: np.dtype
) -> np.ndarray:
    """U(−1/√fan_in, 1/√fan_in)."""
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=tuple(shape)).astype(dtype)


def check_dropout(rates: Sequence[float]) -> None:
    for r in rates:
        if not 0.0 <= float(r) < 1.0:
            raise BadConfig(f"dropout rate must be in [0, 1), got {r}")


@dataclass
class SequenceClassifier(ABC):
    """
    句子分类器的公共部分。

    `params` 把参数名映射到数组，由优化器原地更新；其中总有 "embedding" 词向量表
    （第 0 行为 pad）。`l_max` 由训练确定。
    """

    kind: ClassVar[str] = ""

    num_classes: int
    dim: int
    params: dict[str, np.ndarray]
    l_max: int | None = None
    train_embedding: bool = True
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def dtype(self) -> np.dtype:
        return self.params[EMBEDDING].dtype

    @property
    def table(self) -> EmbeddingTable:
        return EmbeddingTable(rows=self.params[EMBEDDING], init_mode=self.meta.get("init_mode", "direct"))

    def param_count(self, *, include_embedding: bool = False) -> int:
        return int(
            sum(v.size for k, v in self.params.items() if include_embedding or k != EMBEDDING)
        )

    @property
    @abstractmethod
    def min_length(self) -> int:
        """卷积能接受的最短输入。"""

    @abstractmethod
    def logits_node(
        self,
        omega: Node,
        P: dict[str, Node],
        n_valid: np.ndarray | None,
        *,
        training: bool,
        rng: np.random.Generator | None,
    ) -> Node:
        """从 Ω 批量 (B, D, T) 到类别 logits (B, C) 的计算图。"""

    @abstractmethod
    def config_dict(self) -> dict[str, Any]:
        ...

    # ---- 公共前向辅助 ----
    def param_leaves(self) -> dict[str, Node]:
        return {k: leaf(k, v) for k, v in self.params.items()}

    def check_omega(self, omega: np.ndarray) -> np.ndarray:
        omega = np.asarray(omega, dtype=self.dtype)
        if omega.ndim == 2:
            omega = omega[None]
        if omega.ndim != 3 or omega.shape[1] != self.dim:
            raise ShapeMismatch(f"Ω must be (D={self.dim}, T) or (B, D, T), got {omega.shape}")
        return omega

    def graph_from_ids(
        self,
        ids: np.ndarray,
        lengths: np.ndarray | None,
        *,
        training: bool,
        rng: np.random.Generator | None = None,
    ) -> Node:
        ids = check_word_ids(ids, self.params[EMBEDDING].shape[0])
        P = self.param_leaves()
        omega = apply(layers.embedding_forward, layers.embedding_backward, P[EMBEDDING], ids=ids)
        return self.logits_node(omega, P, lengths, training=training, rng=rng)

    def logits_from_omega(
        self,
        omega: np.ndarray,
        n_valid: np.ndarray | None = None,
        *,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> np.ndarray:
        node = self.logits_node(
            leaf("omega", self.check_omega(omega)),
            self.param_leaves(),
            n_valid,
            training=training,
            rng=rng,
        )
        return node.value

    def logits_from_ids(self, ids: np.ndarray, lengths: np.ndarray | None) -> np.ndarray:
        return self.graph_from_ids(ids, lengths, training=False).value
