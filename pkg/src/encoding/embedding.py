from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from action_words.errors import BadConfig, FormatError, InconsistentDim, UnknownWordId
from aw_data.binary import read_blocks, write_blocks
from codebook.kmeans import Codebook

logger = logging.getLogger(__name__)

RANDOM_INIT_BOUND = 0.05


class InitMode(str, Enum):
    CODEWORD = "codeword"
    RANDOM = "random"
    DIRECT = "direct"


@dataclass
class EmbeddingTable:
    """
    (V, D) 词向量表；第 0 行是 pad 词，恒为零向量。
    rows 在训练时可被原地更新（embedding trainable）。
    """

    rows: np.ndarray
    init_mode: InitMode

    def __post_init__(self) -> None:
        self.rows = np.asarray(self.rows, dtype=np.float64)
        self.init_mode = InitMode(self.init_mode)
        if self.rows.ndim != 2 or self.rows.shape[0] < 1:
            raise InconsistentDim(f"embedding rows must be (V, D), got {self.rows.shape}")
        if np.any(self.rows[0] != 0):
            raise InconsistentDim("row 0 (pad) must be the zero vector")

    @property
    def vocab_size(self) -> int:
        return int(self.rows.shape[0])

    @property
    def dim(self) -> int:
        return int(self.rows.shape[1])

    def copy(self) -> EmbeddingTable:
        return EmbeddingTable(rows=self.rows.copy(), init_mode=self.init_mode)


def _with_pad(weights: np.ndarray) -> np.ndarray:
    return np.vstack([np.zeros((1, weights.shape[1])), weights])


def table_from_codebook(cb: Codebook) -> EmbeddingTable:
    return EmbeddingTable(rows=_with_pad(cb.centroids), init_mode=InitMode.CODEWORD)


def table_random(num_words: int, dim: int, seed: int) -> EmbeddingTable:
    """num_words 个非 pad 行，各分量 ~ U[−0.05, 0.05]。"""
    if num_words < 1 or dim < 1:
        raise BadConfig(f"random table needs num_words >= 1 and dim >= 1, got {num_words}, {dim}")
    rng = np.random.default_rng(seed)
    w = rng.uniform(-RANDOM_INIT_BOUND, RANDOM_INIT_BOUND, size=(num_words, dim))
    return EmbeddingTable(rows=_with_pad(w), init_mode=InitMode.RANDOM)


def table_from_weights(weights: Sequence[np.ndarray]) -> EmbeddingTable:
    """第 j+1 行是 id j+1 登记的 ω（SA/DA）。"""
    if not weights:
        raise InconsistentDim("no recorded weights")
    dims = {np.asarray(w).shape for w in weights}
    if len(dims) != 1 or len(next(iter(dims))) != 1:
        raise InconsistentDim(f"recorded weights have shapes {sorted(dims)}")
    return EmbeddingTable(rows=_with_pad(np.vstack(weights)), init_mode=InitMode.DIRECT)


def build_embedding_table(
    mode: InitMode | str,
    *,
    codebook: Codebook | None = None,
    weights: Sequence[np.ndarray] | None = None,
    seed: int = 0,
) -> EmbeddingTable:
    mode = InitMode(mode)
    if mode is InitMode.CODEWORD:
        if codebook is None:
            raise BadConfig("codeword init needs a codebook")
        table = table_from_codebook(codebook)
    elif mode is InitMode.RANDOM:
        if codebook is None:
            raise BadConfig("random init needs the codebook to size the vocabulary")
        table = table_random(codebook.K, codebook.dim, seed)
    else:
        if weights is None:
            raise BadConfig("direct init needs the recorded weights")
        table = table_from_weights(weights)
    logger.info(
        "embedding table: mode=%s V=%d D=%d", mode.value, table.vocab_size, table.dim
    )
    return table


def check_word_ids(ids: np.ndarray, vocab_size: int) -> np.ndarray:
    """所有 id 必须落在 [0, vocab_size)；否则抛 UnknownWordId。返回 int64 数组。"""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= vocab_size):
        bad = int(ids.max()) if ids.max() >= vocab_size else int(ids.min())
        raise UnknownWordId(f"word id {bad} outside table of size {vocab_size}")
    return ids


def embed_ids(ids: np.ndarray, table: EmbeddingTable) -> np.ndarray:
    """
    任意前导形状的 id 数组查表：(..., T) -> (..., D, T)。
    """
    ids = check_word_ids(ids, table.vocab_size)
    return np.swapaxes(table.rows[ids], -1, -2)


def save_table(table: EmbeddingTable, path: str | Path) -> Path:
    header = {
        "kind": "embedding",
        "init_mode": table.init_mode.value,
        "vocab_size": table.vocab_size,
        "dim": table.dim,
    }
    return write_blocks(path, header, {"rows": table.rows})


def load_table(path: str | Path) -> EmbeddingTable:
    header, blocks = read_blocks(path)
    if header.get("kind") != "embedding":
        raise FormatError(f"{path}: not an embedding table (kind={header.get('kind')})")
    rows = blocks["rows"]
    if rows.shape != (int(header["vocab_size"]), int(header["dim"])):
        raise FormatError(f"{path}: header disagrees with block shape {rows.shape}")
    return EmbeddingTable(rows=rows, init_mode=InitMode(header["init_mode"]))
