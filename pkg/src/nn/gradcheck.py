from __future__ import annotations

from collections.abc import Callable, Mapping, MutableMapping

import numpy as np

FD_STEP = 1e-5


def numerical_gradient(
    f: Callable[[], float], x: np.ndarray, step: float = FD_STEP
) -> np.ndarray:
    """
    中心差分 (f(x+h) − f(x−h)) / 2h，逐个元素原地扰动 `x`。
    `f` 闭包引用 `x`，所以 x 必须是损失函数实际读取的数组。
    """
    grad = np.zeros(x.shape, dtype=np.float64)
    flat = x.reshape(-1)
    if not np.shares_memory(flat, x):
        raise ValueError("numerical_gradient needs a contiguous array to perturb in place")
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        fp = float(f())
        flat[i] = orig - step
        fm = float(f())
        flat[i] = orig
        grad.flat[i] = (fp - fm) / (2.0 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    """逐元素 |a − n| / max(|a|, |n|, floor)。"""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)


def check_gradients(
    loss: Callable[[], float],
    params: MutableMapping[str, np.ndarray],
    analytic: Mapping[str, np.ndarray],
    step: float = FD_STEP,
    names: list[str] | None = None,
) -> dict[str, float]:
    """每个参数数组的最大相对误差（参数需为 float64）。"""
    out: dict[str, float] = {}
    for name in names or sorted(params):
        if params[name].dtype != np.float64:
            raise TypeError(f"gradient check needs float64 parameters, '{name}' is {params[name].dtype}")
        num = numerical_gradient(loss, params[name], step)
        out[name] = float(relative_error(analytic[name], num).max(initial=0.0))
    return out
