from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from action_words.errors import EmptyDataset
from encoding.sentences import WordSequence


@dataclass(frozen=True)
class HistogramBaseline:
    """
    词袋分类器：每个词投给训练中它出现最多的类，句子取多数票。忽略词序。
    """

    word_class: np.ndarray  # (V,) 每个 id 的多数类；未出现过的 id 为 −1
    num_classes: int

    def predict(self, seq: WordSequence) -> int:
        ids = np.asarray(seq.words, dtype=np.int64)
        ids = ids[(ids > 0) & (ids < self.word_class.size)]
        votes = self.word_class[ids]
        votes = votes[votes >= 0]
        if votes.size == 0:
            return 0
        return int(np.argmax(np.bincount(votes, minlength=self.num_classes)))


def fit_histogram_baseline(seqs: list[WordSequence], num_classes: int) -> HistogramBaseline:
    if not seqs:
        raise EmptyDataset("empty training set")
    vocab = 1 + max((max(s.words) for s in seqs if s.words), default=0)
    counts = np.zeros((vocab, num_classes), dtype=np.int64)
    for s in seqs:
        np.add.at(counts, (np.asarray(s.words, dtype=np.int64), s.label), 1)
    counts[0] = 0
    word_class = np.where(counts.sum(axis=1) > 0, np.argmax(counts, axis=1), -1)
    return HistogramBaseline(word_class=word_class, num_classes=num_classes)


def histogram_accuracy(baseline: HistogramBaseline, seqs: list[WordSequence]) -> float:
    if not seqs:
        raise EmptyDataset("no sequences to evaluate")
    hits = sum(baseline.predict(s) == s.label for s in seqs)
    return hits / len(seqs)
