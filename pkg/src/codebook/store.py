from __future__ import annotations

from pathlib import Path

from action_words.errors import FormatError
from aw_data.binary import read_blocks, write_blocks
from codebook.kmeans import Codebook


def save_codebook(cb: Codebook, path: str | Path) -> Path:
    header = {
        "kind": "codebook",
        "K": cb.K,
        "dim": cb.dim,
        "seed": cb.seed,
        "distortion": cb.distortion,
    }
    return write_blocks(path, header, {"centroids": cb.centroids})


def load_codebook(path: str | Path) -> Codebook:
    header, blocks = read_blocks(path)
    if header.get("kind") != "codebook":
        raise FormatError(f"{path}: not a codebook file (kind={header.get('kind')})")
    centroids = blocks["centroids"]
    if centroids.shape != (int(header["K"]), int(header["dim"])):
        raise FormatError(f"{path}: header K/dim disagree with block shape {centroids.shape}")
    return Codebook(
        centroids=centroids,
        seed=int(header["seed"]),
        distortion=float(header["distortion"]),
    )
