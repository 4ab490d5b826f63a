from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from action_words.errors import DimMismatch, DimTooLarge, FormatError, InsufficientData
from aw_data.binary import read_blocks, write_blocks

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray  # (D,)
    components: np.ndarray  # (D', D)，行正交归一，方差降序
    explained_variance: np.ndarray  # (D',)

    @property
    def in_dim(self) -> int:
        return int(self.mean.shape[0])

    @property
    def out_dim(self) -> int:
        return int(self.components.shape[0])


def pca_fit(features: np.ndarray, out_dim: int) -> PcaModel:
    """
    样本协方差（ddof=1）的特征分解，不做白化。

    每个主成分的符号固定为绝对值最大的坐标取正。
    """
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InsufficientData(f"pca_fit needs >= 2 samples, got shape {X.shape}")
    n, d = X.shape
    if out_dim < 1 or out_dim > min(d, n):
        raise DimTooLarge(f"out_dim={out_dim} not in [1, min(D={d}, n={n})]")

    mean = X.mean(axis=0)
    cov = np.atleast_2d(np.cov(X - mean, rowvar=False, ddof=1))
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, kind="stable")[::-1]
    evals = np.clip(evals[order], 0.0, None)
    comps = evecs[:, order].T

    pivot = np.argmax(np.abs(comps), axis=1)
    signs = np.sign(comps[np.arange(d), pivot])
    signs[signs == 0] = 1.0
    comps = comps * signs[:, None]

    model = PcaModel(
        mean=mean,
        components=comps[:out_dim].copy(),
        explained_variance=evals[:out_dim].copy(),
    )
    logger.info(
        "pca fit: n=%d D=%d -> D'=%d (retained variance %.4f)",
        n,
        d,
        out_dim,
        float(evals[:out_dim].sum() / evals.sum()) if evals.sum() > 0 else 1.0,
    )
    return model


def pca_project(model: PcaModel, x: np.ndarray) -> np.ndarray:
    """components · (x − mean)；输入可以是单个向量 (D,) 或批量 (n, D)。"""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.in_dim:
        raise DimMismatch(f"expected dim {model.in_dim}, got {x.shape[-1]}")
    return (x - model.mean) @ model.components.T


def pca_reconstruct(model: PcaModel, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != model.out_dim:
        raise DimMismatch(f"expected {model.out_dim} coordinates, got {z.shape[-1]}")
    return z @ model.components + model.mean


def reconstruction_error(model: PcaModel, X: np.ndarray) -> float:
    """X 各行的平均平方重建误差。"""
    X = np.asarray(X, dtype=np.float64)
    R = pca_reconstruct(model, pca_project(model, X))
    return float(np.mean(np.sum((X - R) ** 2, axis=1)))


def truncate(model: PcaModel, n: int) -> PcaModel:
    """只保留前 n 个主成分。"""
    if n > model.out_dim:
        raise DimTooLarge(f"model has {model.out_dim} components, asked for {n}")
    return PcaModel(model.mean, model.components[:n], model.explained_variance[:n])


def save_pca(model: PcaModel, path: str | Path) -> Path:
    header = {"kind": "pca", "dim": model.in_dim, "out_dim": model.out_dim}
    return write_blocks(
        path,
        header,
        {
            "mean": model.mean,
            "components": model.components,
            "explained_variance": model.explained_variance,
        },
    )


def load_pca(path: str | Path) -> PcaModel:
    header, blocks = read_blocks(path)
    if header.get("kind") != "pca":
        raise FormatError(f"{path}: not a PCA file (kind={header.get('kind')})")
    return PcaModel(blocks["mean"], blocks["components"], blocks["explained_variance"])
