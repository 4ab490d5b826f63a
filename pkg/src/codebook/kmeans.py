from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from action_words.errors import DimMismatch, NonFiniteInput, TooFewSamples

logger = logging.getLogger(__name__)

ASSIGN_CHUNK = 4096  # 每个分配块的行数；固定值，结果与线程数无关


@dataclass(frozen=True)
class KMeansParams:
    max_iter: int = 100
    rel_tol: float = 1e-6


@dataclass(frozen=True)
class Codebook:
    centroids: np.ndarray  # (K, D)
    seed: int
    distortion: float  # 训练点到其码字的平均平方距离
    distortion_history: tuple[float, ...] = ()

    @property
    def K(self) -> int:  # noqa: N802
        return int(self.centroids.shape[0])

    @property
    def dim(self) -> int:
        return int(self.centroids.shape[1])


def squared_distances(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    """‖x − c‖² 组成的 (n, K) 矩阵。"""
    return cdist(np.atleast_2d(X), np.atleast_2d(C), metric="sqeuclidean")


def assign(X: np.ndarray, C: np.ndarray, *, threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """
    X 每行的最近中心（并列取最小下标）及其平方距离。
    按固定大小分块处理；threads > 1 时分块在线程池上运行，再按块顺序拼回。
    """
    starts = list(range(0, X.shape[0], ASSIGN_CHUNK))

    def _block(s: int) -> tuple[np.ndarray, np.ndarray]:
        d2 = squared_distances(X[s : s + ASSIGN_CHUNK], C)
        idx = np.argmin(d2, axis=1)
        return idx, d2[np.arange(idx.size), idx]

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_block, starts))
    else:
        parts = [_block(s) for s in starts]
    labels = np.concatenate([p[0] for p in parts])
    mind = np.concatenate([p[1] for p in parts])
    return labels, mind


def _kmeans_plus_plus(X: np.ndarray, K: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = squared_distances(X, X[chosen[0]])[:, 0]
    for _ in range(1, K):
        total = float(d2.sum())
        if total <= 0.0:
            # 剩余点全部与已选中心重合：按下标取第一个未选点
            taken = set(chosen)
            nxt = next(i for i in range(n) if i not in taken)
        else:
            nxt = int(rng.choice(n, p=d2 / total))
        chosen.append(nxt)
        d2 = np.minimum(d2, squared_distances(X, X[nxt])[:, 0])
    return np.asarray(chosen, dtype=np.int64)


def _update_centroids(
    X: np.ndarray, labels: np.ndarray, C: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    K = C.shape[0]
    counts = np.bincount(labels, minlength=K)
    sums = np.zeros_like(C)
    np.add.at(sums, labels, X)
    new_c = C.copy()
    nonempty = counts > 0
    new_c[nonempty] = sums[nonempty] / counts[nonempty, None]
    return new_c, np.flatnonzero(~nonempty)


def kmeans_fit(
    features: np.ndarray,
    K: int,
    seed: int = 0,
    max_iter: int = KMeansParams.max_iter,
    rel_tol: float = KMeansParams.rel_tol,
    *,
    threads: int = 1,
) -> Codebook:
    """
    k-means++ 初始化后做精确的 Lloyd 迭代。

    空簇重新放到离各自中心最远的点上。
    失真的相对改进低于 rel_tol、分配不再变化或达到 max_iter 时停止。
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2:
        raise DimMismatch(f"features must be (n, D), got {X.shape}")
    if K < 1 or X.shape[0] < K:
        raise TooFewSamples(f"need >= K={K} samples, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("non-finite training features")

    rng = np.random.default_rng(seed)
    C = X[_kmeans_plus_plus(X, K, rng)].copy()
    labels, mind = assign(X, C, threads=threads)
    dist = float(mind.mean())
    history = [dist]

    for it in range(1, max_iter + 1):
        C, empty = _update_centroids(X, labels, C)
        if empty.size:
            gap = np.sum((X - C[labels]) ** 2, axis=1)
            far = np.argsort(-gap, kind="stable")[: empty.size]
            C[empty] = X[far]
            logger.warning("iteration %d: reseeded %d empty clusters", it, empty.size)

        new_labels, mind = assign(X, C, threads=threads)
        new_dist = float(mind.mean())
        assert new_dist <= dist * (1.0 + 1e-9) + 1e-12, "Lloyd distortion increased"
        history.append(new_dist)
        logger.debug("iteration %d: distortion %.6g", it, new_dist)

        unchanged = bool(np.array_equal(new_labels, labels)) and not empty.size
        improved = dist - new_dist
        labels, dist = new_labels, new_dist
        if unchanged or improved <= rel_tol * max(dist, 1e-300):
            break

    logger.info(
        "k-means: K=%d n=%d D=%d iterations=%d distortion=%.6g",
        K,
        X.shape[0],
        X.shape[1],
        len(history) - 1,
        dist,
    )
    return Codebook(centroids=C, seed=int(seed), distortion=dist, distortion_history=tuple(history))


def nearest_codeword(cb: Codebook, x: np.ndarray) -> tuple[int, float]:
    """(argmin_i ‖x − c_i‖², squared distance)；并列取最小下标。"""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (cb.dim,):
        raise DimMismatch(f"expected vector of dim {cb.dim}, got shape {x.shape}")
    d2 = squared_distances(x[None, :], cb.centroids)[0]
    i = int(np.argmin(d2))
    return i, float(d2[i])
