"""
批量数组上的可微算子。

每个 `*_forward` 返回 (output, cache)；对应的 `*_backward(g, cache)` 按参数顺序返回各输入的梯度。
形状约定：序列 (B, D, T)，卷积核 (F, d, D)，全连接权重 (out, in)。
"""

from __future__ import annotations

from typing import Any

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from action_words.errors import DimMismatch, EmptyMask, InvalidRate, WindowTooLarge

CE_EPS = 1e-12

Cache = Any


# ---- conv1d ----
def _im2col(x: np.ndarray, d: int) -> np.ndarray:
    """(B, D, T) -> (B, T_out, d·D); 第 τ·D + c 列是 x[:, c, t + τ]。"""
    B, D, _ = x.shape
    win = sliding_window_view(x, d, axis=2)  # (B, D, T_out, d)
    return np.ascontiguousarray(win.transpose(0, 2, 3, 1)).reshape(B, -1, d * D)


def conv1d_forward(x: np.ndarray, W: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, Cache]:
    """
    时间维 valid 互相关：
    out[n, f, t] = b_f + Σ_{τ<d, c<D} W[f, τ, c] · x[n, c, t+τ], T_out = T − d + 1.
    """
    if x.ndim != 3:
        raise DimMismatch(f"conv1d input must be (B, D, T), got {x.shape}")
    F, d, D = W.shape
    if x.shape[1] != D:
        raise DimMismatch(f"conv1d expects D={D}, got {x.shape[1]}")
    T = x.shape[2]
    if T < d:
        raise WindowTooLarge(f"window {d} exceeds sequence length {T}")
    cols = _im2col(x, d)
    out = cols @ W.reshape(F, d * D).T + b  # (B, T_out, F)
    return out.transpose(0, 2, 1), (cols, W, T)


def conv1d_backward(g: np.ndarray, cache: Cache) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    cols, W, T = cache
    F, d, D = W.shape
    B, _, T_out = g.shape
    gt = g.transpose(0, 2, 1)  # (B, T_out, F)
    dW = (gt.reshape(-1, F).T @ cols.reshape(-1, d * D)).reshape(F, d, D)
    db = g.sum(axis=(0, 2))
    dcols = (gt @ W.reshape(F, d * D)).reshape(B, T_out, d, D)
    dx = np.zeros((B, D, T), dtype=g.dtype)
    for tau in range(d):
        dx[:, :, tau : tau + T_out] += dcols[:, :, tau, :].transpose(0, 2, 1)
    return dx, dW, db


# ---- relu ----
def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0)


def relu_forward(x: np.ndarray) -> tuple[np.ndarray, Cache]:
    return relu(x), x > 0


def relu_backward(g: np.ndarray, cache: Cache) -> tuple[np.ndarray]:
    return (g * cache,)


# ---- 全局最大池化 ----
def valid_windows(lengths: np.ndarray, t_out: int) -> np.ndarray:
    """
    感受野仍覆盖真实词的窗口：窗口 t 从位置 t 开始，t >= l_i 时全是填充。
    """
    return np.minimum(np.asarray(lengths, dtype=np.int64), t_out)


def global_max_pool_forward(
    act: np.ndarray, n_valid: np.ndarray | None = None
) -> tuple[np.ndarray, Cache]:
    """
    (B, F, T_out) -> (B, F), 沿时间取最大。给定 n_valid 时只看 t < n_valid[i] 的窗口。
    并列取最早的窗口。
    """
    if act.shape[-1] < 1:
        raise EmptyMask("no time steps to pool")
    scored = act
    if n_valid is not None:
        n_valid = np.asarray(n_valid, dtype=np.int64)
        if np.any(n_valid < 1):
            raise EmptyMask("mask selects no position")
        t = np.arange(act.shape[-1])
        dead = t[None, :] >= n_valid[:, None]  # (B, T_out)
        scored = np.where(dead[:, None, :], -np.inf, act)
    idx = np.argmax(scored, axis=-1)
    out = np.take_along_axis(act, idx[..., None], axis=-1)[..., 0]
    return out, (idx, act.shape)


def global_max_pool(
    act: np.ndarray, n_valid: int | np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """单样本版本：(F, T_out) -> (max (F,), argmax (F,))."""
    a = np.asarray(act)
    if a.ndim == 2:
        mask = None if n_valid is None else np.asarray([n_valid])
        out, (idx, _) = global_max_pool_forward(a[None], mask)
        return out[0], idx[0]
    out, (idx, _) = global_max_pool_forward(a, None if n_valid is None else np.asarray(n_valid))
    return out, idx


def global_max_pool_backward(g: np.ndarray, cache: Cache) -> tuple[np.ndarray]:
    idx, shape = cache
    dx = np.zeros(shape, dtype=g.dtype)
    np.put_along_axis(dx, idx[..., None], g[..., None], axis=-1)
    return (dx,)


# ---- dense ----
def dense_forward(x: np.ndarray, W: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, Cache]:
    """y = x Wᵀ + b （x 的每行是一个样本）。"""
    if x.shape[-1] != W.shape[1]:
        raise DimMismatch(f"dense expects {W.shape[1]} inputs, got {x.shape[-1]}")
    return x @ W.T + b, (x, W)


def dense_backward(g: np.ndarray, cache: Cache) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    x, W = cache
    return g @ W, g.T @ x, g.sum(axis=0)


# ---- dropout ----
def dropout_forward(
    x: np.ndarray, rate: float, rng: np.random.Generator | None, training: bool
) -> tuple[np.ndarray, Cache]:
    """Inverted dropout：保留的单元乘 1/(1 − rate)；非训练时恒等。"""
    if not 0.0 <= rate < 1.0:
        raise InvalidRate(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x, None
    if rng is None:
        raise InvalidRate("training-mode dropout needs an rng")
    keep = (rng.random(x.shape) >= rate).astype(x.dtype) / x.dtype.type(1.0 - rate)
    return x * keep, keep


def dropout(
    x: np.ndarray, rate: float, rng: np.random.Generator | None = None, training: bool = True
) -> np.ndarray:
    return dropout_forward(x, rate, rng, training)[0]


def dropout_backward(g: np.ndarray, cache: Cache) -> tuple[np.ndarray]:
    return (g if cache is None else g * cache,)


# ---- softmax / cross-entropy ----
def softmax(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(p: np.ndarray, labels: int | np.ndarray) -> float | np.ndarray:
    """−log(max(p_label, ε))；单个分布返回标量，(B, C) 返回逐样本数组。"""
    p = np.asarray(p)
    if p.ndim == 1:
        return float(-np.log(max(float(p[int(labels)]), CE_EPS)))
    labels = np.asarray(labels, dtype=np.int64)
    picked = p[np.arange(p.shape[0]), labels]
    return -np.log(np.maximum(picked, CE_EPS))


def softmax_xent_forward(
    logits: np.ndarray, labels: np.ndarray, denom: float
) -> tuple[np.ndarray, Cache]:
    """
    Σ_i CE(softmax(logits_i), y_i) / denom，0 维数组。denom 是整个 mini-batch 的大小，
    因此各梯度分片的损失与梯度相加即为 batch 均值。
    """
    p = softmax(logits)
    loss = cross_entropy(p, labels).sum() / denom
    return np.asarray(loss), (p, np.asarray(labels, dtype=np.int64), denom)


def softmax_xent_backward(g: np.ndarray, cache: Cache) -> tuple[np.ndarray]:
    p, labels, denom = cache
    d = p.copy()
    d[np.arange(p.shape[0]), labels] -= 1.0
    return (d * (np.asarray(g) / denom),)


# ---- 辅助算子 ----
def embedding_forward(E: np.ndarray, ids: np.ndarray) -> tuple[np.ndarray, Cache]:
    """查表：(B, T) ids -> (B, D, T)。"""
    return E[ids].transpose(0, 2, 1), (ids, E.shape)


def embedding_backward(g: np.ndarray, cache: Cache) -> tuple[np.ndarray]:
    ids, shape = cache
    dE = np.zeros(shape, dtype=g.dtype)
    np.add.at(dE, ids, g.transpose(0, 2, 1))
    dE[0] = 0  # pad 行恒为零向量
    return (dE,)


def concat_forward(*xs: np.ndarray) -> tuple[np.ndarray, Cache]:
    sizes = [x.shape[-1] for x in xs]
    return np.concatenate(xs, axis=-1), np.cumsum(sizes)[:-1]


def concat_backward(g: np.ndarray, cache: Cache) -> tuple[np.ndarray, ...]:
    return tuple(np.split(g, cache, axis=-1))


def swap_time_forward(x: np.ndarray) -> tuple[np.ndarray, Cache]:
    """(B, F, T) <-> (B, T, F)."""
    return np.ascontiguousarray(x.transpose(0, 2, 1)), None


def swap_time_backward(g: np.ndarray, cache: Cache) -> tuple[np.ndarray]:
    return (np.ascontiguousarray(g.transpose(0, 2, 1)),)


def take_time_forward(hs: np.ndarray, idx: np.ndarray) -> tuple[np.ndarray, Cache]:
    """hs (B, T, H), idx (B,) -> hs[b, idx[b], :]."""
    idx = np.asarray(idx, dtype=np.int64)
    return hs[np.arange(hs.shape[0]), idx, :], (idx, hs.shape)


def take_time_backward(g: np.ndarray, cache: Cache) -> tuple[np.ndarray]:
    idx, shape = cache
    dh = np.zeros(shape, dtype=g.dtype)
    dh[np.arange(shape[0]), idx, :] = g
    return (dh,)
