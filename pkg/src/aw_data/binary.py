from __future__ import annotations

import json
import logging
import os
import tempfile
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import numpy as np

from action_words.errors import FormatError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
FLOAT_DTYPE = np.dtype("<f4")


def _ensure_dir(p: Path) -> None:
    Path(p).mkdir(parents=True, exist_ok=True)


def atomic_write_bytes(path: str | Path, data: bytes) -> Path:
    """
    先在目标目录写临时文件再改名；读者看不到写了一半的文件。
    """
    path = Path(path)
    _ensure_dir(path.parent)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def atomic_write_text(path: str | Path, text: str) -> Path:
    return atomic_write_bytes(path, text.encode("utf-8"))


def dumps_header(header: Mapping[str, Any]) -> str:
    return json.dumps(dict(header), sort_keys=True, ensure_ascii=False)


def encode_blocks(header: Mapping[str, Any], blocks: Mapping[str, np.ndarray]) -> bytes:
    """
    一行 JSON header（含块列表），其后按声明顺序写出行优先、
    小端 float32 的原始数据块。
    """
    meta = dict(header)
    meta.setdefault("format_version", FORMAT_VERSION)
    meta["blocks"] = [
        {"name": name, "shape": [int(s) for s in np.shape(arr)]} for name, arr in blocks.items()
    ]
    payload = [dumps_header(meta).encode("utf-8"), b"\n"]
    for arr in blocks.values():
        payload.append(np.ascontiguousarray(arr, dtype=FLOAT_DTYPE).tobytes(order="C"))
    return b"".join(payload)


def write_blocks(
    path: str | Path, header: Mapping[str, Any], blocks: Mapping[str, np.ndarray]
) -> Path:
    out = atomic_write_bytes(path, encode_blocks(header, blocks))
    logger.info("wrote %s (%d blocks)", out, len(blocks))
    return out


def read_blocks(path: str | Path) -> tuple[dict[str, Any], dict[str, np.ndarray]]:
    """
    `write_blocks` 的逆操作；数组以 float64 副本返回。
    """
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"file not found: {path}")
    raw = path.read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise FormatError(f"{path}: missing header line")
    try:
        header = json.loads(raw[:nl].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"{path}: bad header ({e})") from e
    if int(header.get("format_version", -1)) != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format_version {header.get('format_version')}")

    body = memoryview(raw)[nl + 1 :]
    offset = 0
    blocks: dict[str, np.ndarray] = {}
    for block in header.get("blocks", []):
        shape = tuple(int(s) for s in block["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * FLOAT_DTYPE.itemsize
        if offset + nbytes > len(body):
            raise FormatError(f"{path}: truncated block '{block['name']}'")
        arr = np.frombuffer(body[offset : offset + nbytes], dtype=FLOAT_DTYPE).reshape(shape)
        blocks[block["name"]] = arr.astype(np.float64)
        offset += nbytes
    if offset != len(body):
        raise FormatError(f"{path}: {len(body) - offset} trailing bytes")
    return header, blocks
