"""
LSTM 单元与序列算子。门按行堆叠为 [input, forget, output, candidate]：
W (4H, in), U (4H, H), b (4H,).
"""

from __future__ import annotations

from typing import Any

import numpy as np
from scipy.special import expit

from action_words.errors import DimMismatch

Cache = Any


def _check(x: np.ndarray, W: np.ndarray, U: np.ndarray, b: np.ndarray) -> int:
    H = U.shape[1]
    if W.shape[0] != 4 * H or U.shape[0] != 4 * H or b.shape != (4 * H,):
        raise DimMismatch(f"inconsistent gate shapes W{W.shape} U{U.shape} b{b.shape}")
    if x.shape[-1] != W.shape[1]:
        raise DimMismatch(f"LSTM expects input dim {W.shape[1]}, got {x.shape[-1]}")
    return H


def lstm_cell_forward(
    x: np.ndarray,
    h_prev: np.ndarray,
    c_prev: np.ndarray,
    W: np.ndarray,
    U: np.ndarray,
    b: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, Cache]:
    """
    i, f, o = σ(·), g = tanh(·); c_t = f⊙c_prev + i⊙g; h_t = o⊙tanh(c_t).
    处理一个 batch 的单步 (B, in)，或单个向量 (in,)。
    """
    H = _check(x, W, U, b)
    z = x @ W.T + h_prev @ U.T + b
    i = expit(z[..., :H])
    f = expit(z[..., H : 2 * H])
    o = expit(z[..., 2 * H : 3 * H])
    g = np.tanh(z[..., 3 * H :])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (x, h_prev, c_prev, i, f, o, g, tc, W, U)


def lstm_cell_backward(
    dh: np.ndarray, dc: np.ndarray, cache: Cache
) -> tuple[np.ndarray, ...]:
    """单步反向，返回 (dx, dh_prev, dc_prev, dW, dU, db)。"""
    x, h_prev, c_prev, i, f, o, g, tc, W, U = cache
    do = dh * tc
    dc = dc + dh * o * (1 - tc * tc)
    di = dc * g
    df = dc * c_prev
    dg = dc * i
    dc_prev = dc * f
    dz = np.concatenate(
        [di * i * (1 - i), df * f * (1 - f), do * o * (1 - o), dg * (1 - g * g)], axis=-1
    )
    dx = dz @ W
    dh_prev = dz @ U
    dW = dz.T @ x
    dU = dz.T @ h_prev
    db = dz.sum(axis=0)
    return dx, dh_prev, dc_prev, dW, dU, db


def lstm_forward(
    xs: np.ndarray, W: np.ndarray, U: np.ndarray, b: np.ndarray
) -> tuple[np.ndarray, Cache]:
    """(B, T, in) -> 隐状态 (B, T, H)；初始状态为零，保持时间顺序。"""
    H = _check(xs, W, U, b)
    B, T, _ = xs.shape
    h = np.zeros((B, H), dtype=xs.dtype)
    c = np.zeros((B, H), dtype=xs.dtype)
    hs = np.empty((B, T, H), dtype=xs.dtype)
    steps = []
    for t in range(T):
        h, c, step = lstm_cell_forward(xs[:, t, :], h, c, W, U, b)
        hs[:, t, :] = h
        steps.append(step)
    return hs, (steps, xs.shape)


def lstm_backward(dhs: np.ndarray, cache: Cache) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """BPTT，返回 (dxs, dW, dU, db)。"""
    steps, shape = cache
    B, T, _ = shape
    W, U = steps[0][8], steps[0][9]
    H = U.shape[1]
    dxs = np.zeros(shape, dtype=dhs.dtype)
    dW = np.zeros_like(W)
    dU = np.zeros_like(U)
    db = np.zeros(4 * H, dtype=W.dtype)
    dh_next = np.zeros((B, H), dtype=dhs.dtype)
    dc_next = np.zeros((B, H), dtype=dhs.dtype)
    for t in reversed(range(T)):
        dx, dh_next, dc_next, gW, gU, gb = lstm_cell_backward(
            dhs[:, t, :] + dh_next, dc_next, steps[t]
        )
        dxs[:, t, :] = dx
        dW += gW
        dU += gU
        db += gb
    return dxs, dW, dU, db
