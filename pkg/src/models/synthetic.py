"""
小规模的词序敏感语料：每个类是同一词表上的马尔可夫链，平稳分布相同，
类别只体现在词序中，词袋里看不出来。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from action_words.errors import BadConfig, NotStochastic, StationaryMismatch
from encoding.sentences import WordSequence
from features.sequence import FeatureSequence

logger = logging.getLogger(__name__)

STOCHASTIC_ATOL = 1e-9


@dataclass(frozen=True)
class SynthParams:
    num_classes: int = 8
    vocab: int = 50
    mean_length: float = 32.0
    min_length: int = 4
    train_per_class: int = 200
    test_per_class: int = 50
    mix: float = 0.1  # 每个转移行中均匀跳转的权重
    feature_dim: int = 16  # 渲染出的帧特征维数
    feature_noise: float = 0.1

    def __post_init__(self) -> None:
        if self.num_classes < 1 or self.vocab < 2:
            raise BadConfig("need >= 1 class and a vocabulary of >= 2 words")
        if self.min_length < 1 or self.mean_length < self.min_length:
            raise BadConfig(f"need 1 <= min_length <= mean_length, got {self.min_length}, {self.mean_length}")
        if self.train_per_class < 1 or self.test_per_class < 1:
            raise BadConfig("need >= 1 train and test sequence per class")
        if not 0.0 < self.mix <= 1.0:
            raise BadConfig(f"mix must be in (0, 1], got {self.mix}")
        if self.feature_dim < 1 or self.feature_noise < 0:
            raise BadConfig("feature_dim must be >= 1 and feature_noise >= 0")


def class_transition_matrices(
    num_classes: int, vocab: int, mix: float, rng: np.random.Generator
) -> np.ndarray:
    """
    (C, V, V): T_c = (1 − mix)·Perm_c + mix/V。每个 T_c 都是双随机矩阵，
    均匀分布对每个类都是平稳分布。
    """
    eye = np.eye(vocab)
    mats = []
    for _ in range(num_classes):
        perm = rng.permutation(vocab)
        mats.append((1.0 - mix) * eye[perm] + mix / vocab)
    return np.stack(mats)


def stationary_distribution(T: np.ndarray) -> np.ndarray:
    """T 对应特征值 1 的左特征向量，归一化为和为 1。"""
    w, vl = linalg.eig(T, left=True, right=False)
    k = int(np.argmin(np.abs(w - 1.0)))
    pi = np.real(vl[:, k])
    pi = pi / pi.sum()
    return np.clip(pi, 0.0, None) / np.clip(pi, 0.0, None).sum()


def validate_transitions(transitions: np.ndarray, atol: float = 1e-6) -> np.ndarray:
    """检查每个矩阵行随机且共享同一平稳分布，并返回该分布。"""
    T = np.asarray(transitions, dtype=np.float64)
    if T.ndim != 3 or T.shape[1] != T.shape[2]:
        raise NotStochastic(f"transitions must be (C, V, V), got {T.shape}")
    if np.any(T < 0) or not np.allclose(T.sum(axis=2), 1.0, atol=STOCHASTIC_ATOL):
        raise NotStochastic("transition rows must be non-negative and sum to 1")
    pis = np.stack([stationary_distribution(t) for t in T])
    if not np.allclose(pis, pis[0], atol=atol):
        gap = float(np.abs(pis - pis[0]).max())
        raise StationaryMismatch(f"classes have different stationary distributions (max gap {gap:.3g})")
    return pis[0]


def sample_chain(
    T: np.ndarray, pi: np.ndarray, length: int, rng: np.random.Generator
) -> np.ndarray:
    """状态 0..V−1，起始状态按 pi 抽取。"""
    cdf = np.cumsum(T, axis=1)
    states = np.empty(length, dtype=np.int64)
    states[0] = rng.choice(len(pi), p=pi)
    u = rng.random(length)
    for t in range(1, length):
        row = cdf[states[t - 1]]
        states[t] = min(int(np.searchsorted(row, u[t] * row[-1], side="right")), len(pi) - 1)
    return states


def generate_synthetic_dataset(
    params: SynthParams,
    seed: int,
    transitions: np.ndarray | None = None,
) -> tuple[list[WordSequence], list[WordSequence]]:
    """
    (train, test) 词句子；id 为 1..V（0 仍是 pad 词）。
    长度为 min_length + Poisson(mean_length − min_length).
    """
    rng = np.random.default_rng(seed)
    if transitions is None:
        transitions = class_transition_matrices(params.num_classes, params.vocab, params.mix, rng)
    transitions = np.asarray(transitions, dtype=np.float64)
    if transitions.shape[0] != params.num_classes:
        raise BadConfig(f"{transitions.shape[0]} transition matrices for {params.num_classes} classes")
    pi = validate_transitions(transitions)

    def _split(name: str, per_class: int) -> list[WordSequence]:
        out = []
        for c in range(params.num_classes):
            for j in range(per_class):
                n = params.min_length + int(rng.poisson(params.mean_length - params.min_length))
                states = sample_chain(transitions[c], pi, n, rng)
                out.append(WordSequence(ids=tuple(states + 1), label=c, video_id=f"{name}_{c:03d}_{j:05d}"))
        return out

    train = _split("train", params.train_per_class)
    test = _split("test", params.test_per_class)
    logger.info(
        "synthetic corpus: C=%d V=%d train=%d test=%d",
        params.num_classes,
        params.vocab,
        len(train),
        len(test),
    )
    return train, test


def word_prototypes(vocab: int, dim: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).normal(size=(vocab, dim))


def render_features(
    seqs: list[WordSequence],
    prototypes: np.ndarray,
    noise: float,
    seed: int,
) -> list[FeatureSequence]:
    """帧特征：每个词的原型加各向同性高斯噪声。"""
    rng = np.random.default_rng(seed)
    out = []
    for s in seqs:
        ids = np.asarray(s.words, dtype=np.int64)
        frames = prototypes[ids - 1] + noise * rng.normal(size=(ids.size, prototypes.shape[1]))
        out.append(FeatureSequence(video_id=s.video_id, label=s.label, frames=frames))
    return out


def unigram_distribution(seqs: list[WordSequence], vocab: int) -> np.ndarray:
    counts = np.zeros(vocab + 1)
    for s in seqs:
        np.add.at(counts, np.asarray(s.words, dtype=np.int64), 1.0)
    return counts[1:] / max(counts[1:].sum(), 1.0)


def bigram_distribution(seqs: list[WordSequence], vocab: int) -> np.ndarray:
    counts = np.zeros((vocab + 1, vocab + 1))
    for s in seqs:
        w = np.asarray(s.words, dtype=np.int64)
        np.add.at(counts, (w[:-1], w[1:]), 1.0)
    counts = counts[1:, 1:]
    return counts / max(counts.sum(), 1.0)


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
