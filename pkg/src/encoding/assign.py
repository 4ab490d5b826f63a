from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from action_words.errors import BadConfig, DimMismatch, KTooLarge, NonFiniteInput
from codebook.kmeans import Codebook, assign, nearest_codeword, squared_distances

logger = logging.getLogger(__name__)

PAD_ID = 0


class EncodingMode(str, Enum):
    HA = "ha"
    SA = "sa"
    DA = "da"


@dataclass(frozen=True)
class Assignment:
    word_id: int
    weight: np.ndarray

    def __post_init__(self) -> None:
        if self.word_id < 0:
            raise ValueError(f"word ids are non-negative, got {self.word_id}")
        if self.word_id == PAD_ID and np.any(self.weight != 0):
            raise ValueError("the pad word must carry the zero vector")


@dataclass(frozen=True)
class SaConfig:
    k: int = 5
    beta: float | None = None  # None：按码本尺度取值，见 default_beta

    def __post_init__(self) -> None:
        if self.k < 1:
            raise BadConfig(f"k must be >= 1, got {self.k}")
        if self.beta is not None and not self.beta > 0:
            raise BadConfig(f"beta must be > 0, got {self.beta}")

    def resolved_beta(self, cb: Codebook) -> float:
        return float(self.beta) if self.beta is not None else default_beta(cb)


def default_beta(cb: Codebook) -> float:
    """β = 1 / (2m)，m 为训练特征到其码字的平均平方距离。"""
    return 1.0 / (2.0 * cb.distortion) if cb.distortion > 0 else 1.0


class WordRegistry:
    """
    SA/DA 词的顺序 id 计数器。id 从 1 开始（0 是 pad 词），每个登记的 ω
    都有自己的 id，N 个特征得到 N 个 id。只允许单线程写入。
    """

    def __init__(self) -> None:
        self._weights: list[np.ndarray] = []

    def register(self, weight: np.ndarray) -> int:
        self._weights.append(np.asarray(weight, dtype=np.float64))
        return len(self._weights)

    @property
    def count(self) -> int:
        return len(self._weights)

    def weights(self) -> list[np.ndarray]:
        return list(self._weights)


def hard_assign(x: np.ndarray, cb: Codebook) -> Assignment:
    """最近码字；id = 1 + 下标，ω 即该中心。"""
    i, _ = nearest_codeword(cb, x)
    return Assignment(word_id=i + 1, weight=cb.centroids[i].copy())


def soft_weight(
    x: np.ndarray, cb: Codebook, k: int, beta: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    单个特征的 (k 近邻下标, 归一化核权重 d_ω, ω)。

    在 k 个最近码字上 d_ω ∝ exp(−β‖x − c_j‖²)；ω = Σ d_ω,j · c_j。
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (cb.dim,):
        raise DimMismatch(f"expected vector of dim {cb.dim}, got shape {x.shape}")
    if k > cb.K:
        raise KTooLarge(f"k={k} exceeds codebook size K={cb.K}")
    d2 = squared_distances(x[None, :], cb.centroids)[0]
    nn = np.argsort(d2, kind="stable")[:k]
    logits = -beta * d2[nn]
    e = np.exp(logits - logits.max())
    dw = e / e.sum()
    omega = (dw[:, None] * cb.centroids[nn]).sum(axis=0)
    return nn, dw, omega


def soft_assign(
    x: np.ndarray, cb: Codebook, cfg: SaConfig, registry: WordRegistry
) -> Assignment:
    _, _, omega = soft_weight(x, cb, cfg.k, cfg.resolved_beta(cb))
    return Assignment(word_id=registry.register(omega), weight=omega)


def direct_assign(x: np.ndarray, registry: WordRegistry) -> Assignment:
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise NonFiniteInput("direct assignment of a non-finite feature")
    w = x.copy()
    return Assignment(word_id=registry.register(w), weight=w)


def encode_frames(
    frames: np.ndarray,
    mode: EncodingMode | str,
    *,
    codebook: Codebook | None = None,
    sa_cfg: SaConfig | None = None,
    registry: WordRegistry | None = None,
    threads: int = 1,
) -> list[int]:
    """
    一个 (l_i, D) 帧矩阵各行对应的词 id。

    ω 逐帧计算（可用线程池）；SA/DA 的 id 随后按帧顺序登记，id 序列与 `threads` 无关。
    """
    mode = EncodingMode(mode)
    frames = np.asarray(frames, dtype=np.float64)
    if mode is EncodingMode.DA:
        if registry is None:
            raise BadConfig("direct assignment needs a WordRegistry")
        return [direct_assign(f, registry).word_id for f in frames]

    if codebook is None:
        raise BadConfig(f"{mode.value} encoding needs a codebook")
    if frames.shape[1] != codebook.dim:
        raise DimMismatch(f"frames have dim {frames.shape[1]}, codebook has {codebook.dim}")
    if mode is EncodingMode.HA:
        labels, _ = assign(frames, codebook.centroids, threads=threads)
        return [int(i) + 1 for i in labels]

    if registry is None:
        raise BadConfig("soft assignment needs a WordRegistry")
    cfg = sa_cfg or SaConfig()
    beta = cfg.resolved_beta(codebook)

    def _omega(f: np.ndarray) -> np.ndarray:
        return soft_weight(f, codebook, cfg.k, beta)[2]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            omegas = list(pool.map(_omega, frames))
    else:
        omegas = [_omega(f) for f in frames]
    return [registry.register(w) for w in omegas]
