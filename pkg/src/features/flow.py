from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from action_words.errors import EmptyStats, ShapeMismatch

FLOW_ZERO_LEVEL = 128.0  # 8 位光流图中 128 表示零运动


class RatioMode(str, Enum):
    MU_ALL = "mu_all"  # 一阶估计：高于全局均值的帧
    MU_UNDER = "mu_under"
    HALF_MU_UNDER = "half_mu_under"


@dataclass(frozen=True)
class FlowStats:
    per_frame_avg: np.ndarray
    mu_all: float
    mu_under: float

    @property
    def num_frames(self) -> int:
        return int(self.per_frame_avg.size)


def flow_frame_average(u: np.ndarray, v: np.ndarray, *, centered: bool = False) -> float:
    """
    f_i = ½ (Σ|u−128|/P + Σ|v−128|/P)，P 为一帧的像素数。

    centered=True 时输入已是有符号光流，直接取 |u|、|v|。
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ShapeMismatch(f"u {u.shape} vs v {v.shape}")
    if u.size < 1:
        raise ShapeMismatch("empty flow grid")
    offset = 0.0 if centered else FLOW_ZERO_LEVEL
    return 0.5 * (float(np.mean(np.abs(u - offset))) + float(np.mean(np.abs(v - offset))))


def flow_stats(per_frame_avg: np.ndarray) -> FlowStats:
    """
    μ_all 取全部帧；μ_under 取 f_i ≤ μ_all 的帧（相等归入下方集合）。
    """
    f = np.asarray(per_frame_avg, dtype=np.float64).ravel()
    if f.size == 0:
        raise EmptyStats("no frames in flow statistics")
    # 均值的舍入误差不能让它越出 [min, max]
    mu_all = float(np.clip(np.mean(f), f.min(), f.max()))
    under = f[f <= mu_all]
    assert under.size > 0
    mu_under = float(np.clip(np.mean(under), under.min(), under.max()))
    return FlowStats(per_frame_avg=f, mu_all=mu_all, mu_under=mu_under)


def ratio_threshold(stats: FlowStats, mode: RatioMode | str) -> float:
    mode = RatioMode(mode)
    if mode is RatioMode.MU_ALL:
        return stats.mu_all
    if mode is RatioMode.MU_UNDER:
        return stats.mu_under
    return stats.mu_under / 2.0


def estimate_ratio(stats: FlowStats, mode: RatioMode | str = RatioMode.HALF_MU_UNDER) -> float:
    """r = |{f_i > threshold}| / 总帧数（严格大于）。"""
    if stats.num_frames == 0:
        raise EmptyStats("no frames in flow statistics")
    thr = ratio_threshold(stats, mode)
    return float(np.count_nonzero(stats.per_frame_avg > thr)) / stats.num_frames
