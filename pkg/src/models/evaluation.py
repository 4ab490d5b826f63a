from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from action_words.errors import BadConfig, EmptyDataset
from action_words.rounding import scaled_round
from encoding.embedding import EmbeddingTable
from encoding.sentences import WordSequence, batch_ids, pad_or_truncate
from models.base import EMBEDDING, SequenceClassifier
from nn.layers import softmax

logger = logging.getLogger(__name__)

FRACTIONS: tuple[float, ...] = tuple(k / 10 for k in range(1, 11))
EVAL_CHUNK = 64  # 每次前向的序列数


@dataclass(frozen=True)
class PredictionCurve:
    fractions: tuple[float, ...]
    accuracies: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.fractions) != len(FRACTIONS) or len(self.accuracies) != len(FRACTIONS):
            raise ValueError("a prediction curve has exactly 10 entries")

    def at(self, fraction: float) -> float:
        return self.accuracies[self.fractions.index(fraction)]

    def as_dict(self) -> dict[str, float]:
        return {f"{f:.1f}": a for f, a in zip(self.fractions, self.accuracies)}


def _resolve_l_max(model: SequenceClassifier, l_max: int | None) -> int:
    lm = l_max or model.l_max
    if lm is None:
        raise BadConfig("model has no l_max; train it first or pass l_max")
    return int(lm)


def _with_table(model: SequenceClassifier, table: EmbeddingTable | None) -> SequenceClassifier:
    """`model` 的浅拷贝，词向量改读 `table`；其余参数共享。"""
    if table is None:
        return model
    params = dict(model.params)
    params[EMBEDDING] = table.rows.astype(model.dtype)
    return replace(model, params=params)


def predict_proba(
    model: SequenceClassifier,
    seqs: list[WordSequence],
    table: EmbeddingTable | None = None,
    *,
    l_max: int | None = None,
    threads: int = 1,
) -> np.ndarray:
    """推理模式下的 (N, C) 类别概率；序列先填充/截断到 l_max。"""
    if not seqs:
        return np.zeros((0, model.num_classes))
    m = _with_table(model, table)
    ids, lengths = batch_ids(seqs, _resolve_l_max(model, l_max))
    starts = list(range(0, len(seqs), EVAL_CHUNK))

    def _chunk(s: int) -> np.ndarray:
        sl = slice(s, s + EVAL_CHUNK)
        return softmax(m.logits_from_ids(ids[sl], lengths[sl]))

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_chunk, starts))
    else:
        parts = [_chunk(s) for s in starts]
    return np.concatenate(parts, axis=0)


def predict(
    model: SequenceClassifier, seq: WordSequence, table: EmbeddingTable | None = None
) -> tuple[int, np.ndarray]:
    """(argmax 标签, 概率)；并列取最小类别下标。"""
    p = predict_proba(model, [seq], table)[0]
    return int(np.argmax(p)), p


def recognition_accuracy(
    model: SequenceClassifier,
    seqs: list[WordSequence],
    table: EmbeddingTable | None = None,
    *,
    threads: int = 1,
) -> float:
    if not seqs:
        raise EmptyDataset("no sequences to evaluate")
    p = predict_proba(model, seqs, table, threads=threads)
    y = np.asarray([s.label for s in seqs])
    return float(np.mean(np.argmax(p, axis=1) == y))


def prefix(seq: WordSequence, fraction: float, l_max: int | None = None) -> WordSequence:
    """
    First max(1, round_half_up(fraction · l_i)) 个真实词；给定 l_max 时再填充/截断。
    """
    if not 0.0 < fraction <= 1.0:
        raise BadConfig(f"fraction must be in (0, 1], got {fraction}")
    words = seq.words
    n = max(1, scaled_round(fraction, len(words)))
    cut = WordSequence(ids=words[:n], label=seq.label, video_id=seq.video_id)
    return pad_or_truncate(cut, l_max) if l_max is not None else cut


def prediction_curve(
    model: SequenceClassifier,
    seqs: list[WordSequence],
    table: EmbeddingTable | None = None,
    *,
    threads: int = 1,
) -> PredictionCurve:
    """每个句子只观察前 10%、20%、…、100% 时的准确率。"""
    accs = []
    for f in FRACTIONS:
        if f == 1.0:
            acc = recognition_accuracy(model, seqs, table, threads=threads)
        else:
            acc = recognition_accuracy(model, [prefix(s, f) for s in seqs], table, threads=threads)
        accs.append(acc)
        logger.debug("prefix %.1f: accuracy %.4f", f, acc)
    return PredictionCurve(fractions=FRACTIONS, accuracies=tuple(accs))
