from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from action_words.errors import FormatError, NonFiniteInput
from aw_data.binary import FLOAT_DTYPE, atomic_write_bytes, atomic_write_text
from features.sequence import FeatureSequence, Stream

logger = logging.getLogger(__name__)

MANIFEST_COLUMNS = [
    "video_id",
    "label",
    "num_frames",
    "dim",
    "stream",
    "data_file",
    "byte_offset",
]


def _read_jsonl(path: Path) -> list[dict[str, Any]]:
    rows = []
    with Path(path).open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise FormatError(f"{path}:{lineno}: {e}") from e
    return rows


def read_manifest(manifest_path: str | Path) -> pd.DataFrame:
    """
    以 DataFrame 返回清单（每个视频一行），列与类型按声明规范化。
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise FormatError(f"manifest not found: {manifest_path}")
    df = pd.DataFrame(_read_jsonl(manifest_path))
    missing = [c for c in MANIFEST_COLUMNS if c not in df.columns]
    if df.empty or missing:
        raise FormatError(f"{manifest_path}: empty manifest or missing columns {missing}")
    df = df[MANIFEST_COLUMNS].copy()
    for c in ["label", "num_frames", "dim", "byte_offset"]:
        try:
            num = pd.to_numeric(df[c], errors="raise")
            if (num % 1 != 0).any():
                raise ValueError("fractional values")
            df[c] = num.astype("int64")
        except (TypeError, ValueError) as e:
            raise FormatError(f"{manifest_path}: column '{c}' is not integer ({e})") from e
        if (df[c] < 0).any():
            raise FormatError(f"{manifest_path}: column '{c}' has negative values")
    streams = {s.value for s in Stream}
    bad = sorted(set(df["stream"].astype(str)) - streams)
    if bad:
        raise FormatError(f"{manifest_path}: unknown stream {bad}, expected one of {sorted(streams)}")
    df["video_id"] = df["video_id"].astype(str)
    return df


def load_feature_sequences(manifest_path: str | Path) -> list[FeatureSequence]:
    """
    读取清单中的每个视频；数据文件路径相对于清单所在目录。
    """
    manifest_path = Path(manifest_path)
    df = read_manifest(manifest_path)
    cache: dict[Path, bytes] = {}
    out: list[FeatureSequence] = []
    for r in df.itertuples(index=False):
        data_path = manifest_path.parent / str(r.data_file)
        if data_path not in cache:
            if not data_path.exists():
                raise FormatError(f"data file not found: {data_path}")
            cache[data_path] = data_path.read_bytes()
        count = int(r.num_frames) * int(r.dim)
        nbytes = count * FLOAT_DTYPE.itemsize
        blob = cache[data_path]
        if int(r.byte_offset) + nbytes > len(blob):
            raise FormatError(f"{data_path}: video {r.video_id} runs past end of file")
        arr = np.frombuffer(blob, dtype=FLOAT_DTYPE, count=count, offset=int(r.byte_offset))
        frames = arr.reshape(int(r.num_frames), int(r.dim)).astype(np.float64)
        if not np.all(np.isfinite(frames)):
            raise NonFiniteInput(f"{r.video_id}: non-finite values in {data_path}")
        out.append(
            FeatureSequence(
                video_id=str(r.video_id),
                label=int(r.label),
                frames=frames,
                stream=Stream(str(r.stream)),
            )
        )
    logger.info("loaded %d sequences from %s", len(out), manifest_path)
    return out


def write_feature_sequences(
    seqs: list[FeatureSequence], out_dir: str | Path, name: str
) -> Path:
    """
    写出 `<name>.f32`（全部帧，行优先 float32）和 `<name>.jsonl`（清单），返回清单路径。
    """
    out_dir = Path(out_dir)
    data_name = f"{name}.f32"
    chunks: list[bytes] = []
    rows: list[str] = []
    offset = 0
    for s in seqs:
        blob = np.ascontiguousarray(s.frames, dtype=FLOAT_DTYPE).tobytes(order="C")
        rows.append(
            json.dumps(
                {
                    "video_id": s.video_id,
                    "label": int(s.label),
                    "num_frames": s.length,
                    "dim": s.dim,
                    "stream": s.stream.value,
                    "data_file": data_name,
                    "byte_offset": offset,
                },
                sort_keys=True,
            )
        )
        chunks.append(blob)
        offset += len(blob)
    atomic_write_bytes(out_dir / data_name, b"".join(chunks))
    manifest = atomic_write_text(out_dir / f"{name}.jsonl", "".join(r + "\n" for r in rows))
    logger.info("wrote %s (%d sequences, %d bytes)", manifest, len(seqs), offset)
    return manifest


def read_flow_values(path: str | Path) -> np.ndarray:
    """
    光流统计文件：每行一个逐帧平均值 f_i（忽略空行）。
    """
    path = Path(path)
    if not path.exists():
        raise FormatError(f"flow statistics file not found: {path}")
    values = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError as e:
            raise FormatError(f"{path}:{lineno}: not a number: {line!r}") from e
    arr = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{path}: non-finite flow values")
    return arr


def write_flow_values(values: np.ndarray, path: str | Path) -> Path:
    return atomic_write_text(path, "".join(f"{float(v)!r}\n" for v in np.ravel(values)))
