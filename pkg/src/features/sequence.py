from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from action_words.errors import DimMismatch, InsufficientData, NonFiniteInput


class Stream(str, Enum):
    TEMPORAL = "temporal"
    SPATIAL = "spatial"
    FUSED = "fused"


@dataclass(frozen=True)
class FeatureSequence:
    """
    一个视频：`frames` 为 (l_i, D) 矩阵，每行一个帧特征。

    frame_stride：相邻特征之间间隔的帧数（默认 5）。
    stack_depth：一个时间流特征背后堆叠的光流帧数（默认 10），仅作元数据。
    """

    video_id: str
    label: int
    frames: np.ndarray
    stream: Stream = Stream.FUSED
    frame_stride: int = 5
    stack_depth: int = 10
    extra: dict[str, str] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim == 1:
            frames = frames[None, :]
        if frames.ndim != 2:
            raise DimMismatch(f"{self.video_id}: frames must be 2-D, got shape {frames.shape}")
        if frames.shape[0] < 1 or frames.shape[1] < 1:
            raise InsufficientData(f"{self.video_id}: empty frame matrix {frames.shape}")
        if not np.all(np.isfinite(frames)):
            raise NonFiniteInput(f"{self.video_id}: non-finite feature values")
        if self.frame_stride < 1 or self.stack_depth < 1:
            raise InsufficientData(f"{self.video_id}: frame_stride/stack_depth must be >= 1")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "stream", Stream(self.stream))

    @property
    def length(self) -> int:
        return int(self.frames.shape[0])

    @property
    def dim(self) -> int:
        return int(self.frames.shape[1])


def stack_frames(seqs: list[FeatureSequence]) -> np.ndarray:
    """按语料顺序把所有帧拼成一个 (N, D) 矩阵。"""
    if not seqs:
        raise InsufficientData("no sequences")
    dims = {s.dim for s in seqs}
    if len(dims) != 1:
        raise DimMismatch(f"mixed feature dims in corpus: {sorted(dims)}")
    return np.vstack([s.frames for s in seqs])


def length_stats(seqs: list[FeatureSequence] | list[int]) -> dict[str, float]:
    """
    序列长度统计（数量、均值、最小、最大），即数据集统计表中的各列。
    """
    lengths = [s if isinstance(s, int) else s.length for s in seqs]
    if not lengths:
        return {"count": 0, "mean_length": 0.0, "min_length": 0, "max_length": 0}
    arr = np.asarray(lengths, dtype=float)
    return {
        "count": int(arr.size),
        "mean_length": float(arr.mean()),
        "min_length": int(arr.min()),
        "max_length": int(arr.max()),
    }
