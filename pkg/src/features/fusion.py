from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from action_words.errors import BadConfig, DimMismatch, InsufficientComponents
from action_words.rounding import scaled_round
from features.pca import PcaModel, pca_fit, pca_project
from features.sequence import FeatureSequence, Stream, stack_frames

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FusionConfig:
    ratio: float = 0.5  # r：融合向量中时间流所占比例
    fused_dim: int = 512  # D'

    def __post_init__(self) -> None:
        if not 0.0 <= float(self.ratio) <= 1.0:
            raise BadConfig(f"ratio must be in [0, 1], got {self.ratio}")
        if int(self.fused_dim) < 1:
            raise BadConfig(f"fused_dim must be >= 1, got {self.fused_dim}")

    def split(self) -> tuple[int, int]:
        """(n_t, n_s)：时间流坐标在前，余下归空间流。"""
        n_t = scaled_round(self.ratio, self.fused_dim)
        return n_t, int(self.fused_dim) - n_t


def fuse(
    x_t: np.ndarray,
    x_s: np.ndarray,
    cfg: FusionConfig,
    pca_t: PcaModel,
    pca_s: PcaModel,
) -> np.ndarray:
    """
    PCA(x_t)[:n_t] ⊕ PCA(x_s)[:n_s]；先投影再截取前几维。
    支持单个向量 (D,) 或对齐的批量 (n, D)。
    """
    n_t, n_s = cfg.split()
    if pca_t.out_dim < n_t:
        raise InsufficientComponents(f"temporal PCA has {pca_t.out_dim} < {n_t} components")
    if pca_s.out_dim < n_s:
        raise InsufficientComponents(f"spatial PCA has {pca_s.out_dim} < {n_s} components")
    zt = pca_project(pca_t, x_t)[..., :n_t]
    zs = pca_project(pca_s, x_s)[..., :n_s]
    if zt.shape[:-1] != zs.shape[:-1]:
        raise DimMismatch(f"stream batch shapes differ: {zt.shape} vs {zs.shape}")
    return np.concatenate([zt, zs], axis=-1)


def fit_stream_pcas(
    temporal: list[FeatureSequence],
    spatial: list[FeatureSequence],
    cfg: FusionConfig,
) -> tuple[PcaModel, PcaModel]:
    """
    每个流在训练帧上各拟合一个 PCA，主成分数刚好满足切分需要。
    """
    n_t, n_s = cfg.split()
    Xt = stack_frames(temporal)
    Xs = stack_frames(spatial)
    pca_t = pca_fit(Xt, max(1, n_t))
    pca_s = pca_fit(Xs, max(1, n_s))
    return pca_t, pca_s


def fuse_sequences(
    temporal: FeatureSequence,
    spatial: FeatureSequence,
    cfg: FusionConfig,
    pca_t: PcaModel,
    pca_s: PcaModel,
) -> FeatureSequence:
    if temporal.video_id != spatial.video_id or temporal.label != spatial.label:
        raise DimMismatch(
            f"stream mismatch: {temporal.video_id}/{temporal.label} vs "
            f"{spatial.video_id}/{spatial.label}"
        )
    n = min(temporal.length, spatial.length)
    if temporal.length != spatial.length:
        logger.warning(
            "%s: stream lengths differ (%d vs %d); truncating to %d",
            temporal.video_id,
            temporal.length,
            spatial.length,
            n,
        )
    fused = fuse(temporal.frames[:n], spatial.frames[:n], cfg, pca_t, pca_s)
    return FeatureSequence(
        video_id=temporal.video_id,
        label=temporal.label,
        frames=fused,
        stream=Stream.FUSED,
        frame_stride=temporal.frame_stride,
        stack_depth=temporal.stack_depth,
    )


def fuse_corpus(
    temporal: list[FeatureSequence],
    spatial: list[FeatureSequence],
    cfg: FusionConfig,
    pca_t: PcaModel,
    pca_s: PcaModel,
) -> list[FeatureSequence]:
    by_id = {s.video_id: s for s in spatial}
    missing = [t.video_id for t in temporal if t.video_id not in by_id]
    if missing:
        raise DimMismatch(f"{len(missing)} temporal videos lack a spatial stream, e.g. {missing[0]}")
    return [fuse_sequences(t, by_id[t.video_id], cfg, pca_t, pca_s) for t in temporal]
