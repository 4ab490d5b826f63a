from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from action_words.errors import BadConfig, FormatError
from aw_data.binary import atomic_write_text
from codebook.kmeans import Codebook
from encoding.assign import PAD_ID, EncodingMode, SaConfig, WordRegistry, encode_frames
from encoding.embedding import (
    EmbeddingTable,
    InitMode,
    build_embedding_table,
    embed_ids,
    load_table,
    save_table,
)
from features.sequence import FeatureSequence, length_stats

logger = logging.getLogger(__name__)

TRAIN_FILE = "sentences_train.jsonl"
TEST_FILE = "sentences_test.jsonl"
TABLE_FILE = "embedding.bin"
META_FILE = "encoding.json"


@dataclass(frozen=True)
class WordSequence:
    """
    一个视频句子。`ids` 尾部可带填充；`real_length` 是前面真实词的个数
    （None 表示没有填充，全部是真实词）。
    """

    ids: tuple[int, ...]
    label: int = -1
    video_id: str = ""
    real_length: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "ids", tuple(int(i) for i in self.ids))
        if self.real_length is not None and not 0 <= self.real_length <= len(self.ids):
            raise ValueError(f"real_length {self.real_length} outside [0, {len(self.ids)}]")

    @property
    def length(self) -> int:
        return len(self.ids)

    @property
    def num_real(self) -> int:
        return len(self.ids) if self.real_length is None else self.real_length

    @property
    def words(self) -> tuple[int, ...]:
        return self.ids[: self.num_real]


def pad_or_truncate(seq: WordSequence, l_max: int) -> WordSequence:
    """保留前 l_max 个真实词；尾部用 id 0 填充。"""
    if l_max < 1:
        raise BadConfig(f"l_max must be >= 1, got {l_max}")
    words = seq.words[:l_max]
    ids = words + (PAD_ID,) * (l_max - len(words))
    return WordSequence(ids=ids, label=seq.label, video_id=seq.video_id, real_length=len(words))


def embed(seq: WordSequence, table: EmbeddingTable) -> np.ndarray:
    """Ω (D × len(ids))；第 t 列是 ids[t] 对应的表行。"""
    return embed_ids(np.asarray(seq.ids, dtype=np.int64), table)


def batch_ids(seqs: list[WordSequence], l_max: int) -> tuple[np.ndarray, np.ndarray]:
    """(B, l_max) 填充后的 id 矩阵，以及 (B,) 真实长度。"""
    padded = [pad_or_truncate(s, l_max) for s in seqs]
    ids = np.asarray([p.ids for p in padded], dtype=np.int64).reshape(len(seqs), l_max)
    lengths = np.asarray([p.num_real for p in padded], dtype=np.int64)
    return ids, lengths


def encode_corpus(
    seqs: list[FeatureSequence],
    mode: EncodingMode | str,
    *,
    codebook: Codebook | None = None,
    sa_cfg: SaConfig | None = None,
    registry: WordRegistry | None = None,
    threads: int = 1,
) -> list[WordSequence]:
    mode = EncodingMode(mode)
    out = [
        WordSequence(
            ids=tuple(
                encode_frames(
                    s.frames,
                    mode,
                    codebook=codebook,
                    sa_cfg=sa_cfg,
                    registry=registry,
                    threads=threads,
                )
            ),
            label=s.label,
            video_id=s.video_id,
        )
        for s in seqs
    ]
    if registry is not None:
        logger.info("%s encoding: %d sequences, vocabulary now %d", mode.value, len(out), registry.count)
    return out


@dataclass
class EncodedCorpus:
    train: list[WordSequence]
    test: list[WordSequence]
    table: EmbeddingTable
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def num_classes(self) -> int:
        if "num_classes" in self.meta:
            return int(self.meta["num_classes"])
        return 1 + max(s.label for s in self.train + self.test)

    @property
    def default_l_max(self) -> int:
        """最长训练句长度；训练数据上截断不起作用。"""
        return max(s.num_real for s in self.train)


def encode_split(
    train: list[FeatureSequence],
    test: list[FeatureSequence],
    mode: EncodingMode | str,
    init_mode: InitMode | str,
    *,
    codebook: Codebook | None = None,
    sa_cfg: SaConfig | None = None,
    seed: int = 0,
    threads: int = 1,
) -> EncodedCorpus:
    """
    编码 train/test 两个划分并构建对应的词向量表。

    SA/DA 先登记训练集的词，再用同一（冻结的）码本登记测试集的词。
    """
    mode = EncodingMode(mode)
    init_mode = InitMode(init_mode)
    if mode is EncodingMode.HA and init_mode is InitMode.DIRECT:
        raise BadConfig("hard assignment uses codeword or random init")
    if mode is not EncodingMode.HA and init_mode is not InitMode.DIRECT:
        raise BadConfig(f"{mode.value} words each carry their own ω; use init 'direct'")

    registry = None if mode is EncodingMode.HA else WordRegistry()
    kwargs: dict[str, Any] = dict(codebook=codebook, sa_cfg=sa_cfg, registry=registry, threads=threads)
    enc_train = encode_corpus(train, mode, **kwargs)
    enc_test = encode_corpus(test, mode, **kwargs)
    table = build_embedding_table(
        init_mode,
        codebook=codebook,
        weights=registry.weights() if registry is not None else None,
        seed=seed,
    )
    labels = [s.label for s in enc_train + enc_test]
    meta = {
        "mode": mode.value,
        "init_mode": init_mode.value,
        "num_classes": 1 + max(labels),
        "vocab_size": table.vocab_size,
        "dim": table.dim,
        "train": length_stats([s.num_real for s in enc_train]),
        "test": length_stats([s.num_real for s in enc_test]),
    }
    if codebook is not None:
        meta["K"] = codebook.K
    if mode is EncodingMode.SA:
        cfg = sa_cfg or SaConfig()
        meta["k"] = cfg.k
        meta["beta"] = cfg.resolved_beta(codebook) if codebook is not None else None
    return EncodedCorpus(train=enc_train, test=enc_test, table=table, meta=meta)


def write_sentences(seqs: list[WordSequence], path: str | Path) -> Path:
    lines = [
        json.dumps({"video_id": s.video_id, "label": int(s.label), "ids": list(s.words)}, sort_keys=True)
        for s in seqs
    ]
    return atomic_write_text(path, "".join(line + "\n" for line in lines))


def read_sentences(path: str | Path) -> list[WordSequence]:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"sentence file not found: {path}")
    out = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            out.append(
                WordSequence(
                    ids=tuple(row["ids"]),
                    label=int(row["label"]),
                    video_id=str(row.get("video_id", "")),
                )
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise FormatError(f"{path}:{lineno}: {e}") from e
    return out


def save_encoded_corpus(corpus: EncodedCorpus, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    write_sentences(corpus.train, out_dir / TRAIN_FILE)
    write_sentences(corpus.test, out_dir / TEST_FILE)
    save_table(corpus.table, out_dir / TABLE_FILE)
    atomic_write_text(
        out_dir / META_FILE, json.dumps(corpus.meta, indent=2, sort_keys=True) + "\n"
    )
    logger.info(
        "wrote encoded corpus to %s (train=%d test=%d V=%d)",
        out_dir,
        len(corpus.train),
        len(corpus.test),
        corpus.table.vocab_size,
    )
    return out_dir


def load_encoded_corpus(data_dir: str | Path) -> EncodedCorpus:
    data_dir = Path(data_dir)
    meta_path = data_dir / META_FILE
    meta: dict[str, Any] = {}
    if meta_path.exists():
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise FormatError(f"{meta_path}: {e}") from e
    return EncodedCorpus(
        train=read_sentences(data_dir / TRAIN_FILE),
        test=read_sentences(data_dir / TEST_FILE),
        table=load_table(data_dir / TABLE_FILE),
        meta=meta,
    )
