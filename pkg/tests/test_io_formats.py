from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from action_words.errors import FormatError, NonFiniteInput
from aw_data.binary import FORMAT_VERSION, atomic_write_text, read_blocks, write_blocks
from aw_data.loaders import (
    MANIFEST_COLUMNS,
    load_feature_sequences,
    read_flow_values,
    read_manifest,
    write_feature_sequences,
    write_flow_values,
)
from features.sequence import FeatureSequence, Stream


def test_blocks_header_and_payload(tmp_path: Path, rng):
    a = rng.normal(size=(3, 4))
    b = np.arange(5.0)
    p = write_blocks(tmp_path / "x.bin", {"kind": "test", "K": 3}, {"a": a, "b": b})
    raw = p.read_bytes()
    header = json.loads(raw.split(b"\n", 1)[0])
    assert header["format_version"] == FORMAT_VERSION
    assert header["blocks"] == [{"name": "a", "shape": [3, 4]}, {"name": "b", "shape": [5]}]
    # 头部之后恰好是 little-endian float32 数据
    assert len(raw) - raw.index(b"\n") - 1 == (12 + 5) * 4

    h, blocks = read_blocks(p)
    assert h["kind"] == "test" and h["K"] == 3
    assert np.allclose(blocks["a"], a.astype(np.float32))
    assert np.array_equal(blocks["b"], b)
    assert not list(tmp_path.glob("*.tmp"))


def test_blocks_truncated(tmp_path: Path):
    p = write_blocks(tmp_path / "x.bin", {}, {"a": np.ones(10)})
    p.write_bytes(p.read_bytes()[:-4])
    with pytest.raises(FormatError, match="truncated"):
        read_blocks(p)


def test_blocks_trailing_bytes(tmp_path: Path):
    p = write_blocks(tmp_path / "x.bin", {}, {"a": np.ones(2)})
    p.write_bytes(p.read_bytes() + b"\x00\x00\x00\x00")
    with pytest.raises(FormatError, match="trailing"):
        read_blocks(p)


@pytest.mark.parametrize(
    "content",
    [b"no newline at all", b"{not json\n", b'{"format_version": 2, "blocks": []}\n'],
)
def test_blocks_bad_header(tmp_path: Path, content: bytes):
    p = tmp_path / "bad.bin"
    p.write_bytes(content)
    with pytest.raises(FormatError):
        read_blocks(p)


def test_atomic_write_replaces(tmp_path: Path):
    p = tmp_path / "sub" / "f.txt"
    atomic_write_text(p, "one")
    atomic_write_text(p, "two")
    assert p.read_text(encoding="utf-8") == "two"
    assert [q.name for q in p.parent.iterdir()] == ["f.txt"]


def _videos(rng) -> list[FeatureSequence]:
    return [
        FeatureSequence(video_id="v1", label=0, frames=rng.normal(size=(4, 3)), stream=Stream.SPATIAL),
        FeatureSequence(video_id="v2", label=2, frames=rng.normal(size=(7, 3)), stream=Stream.SPATIAL),
    ]


def test_feature_manifest_round_trip(tmp_path: Path, rng):
    seqs = _videos(rng)
    manifest = write_feature_sequences(seqs, tmp_path, "train")
    assert manifest.name == "train.jsonl" and (tmp_path / "train.f32").exists()

    df = read_manifest(manifest)
    assert list(df.columns) == MANIFEST_COLUMNS
    assert list(df["byte_offset"]) == [0, 4 * 3 * 4]
    assert list(df["num_frames"]) == [4, 7]

    back = load_feature_sequences(manifest)
    for s, b in zip(seqs, back):
        assert (b.video_id, b.label, b.stream) == (s.video_id, s.label, s.stream)
        assert np.allclose(b.frames, s.frames.astype(np.float32))


def test_manifest_missing_and_incomplete(tmp_path: Path):
    with pytest.raises(FormatError):
        read_manifest(tmp_path / "nope.jsonl")
    p = tmp_path / "m.jsonl"
    p.write_text(json.dumps({"video_id": "a", "label": 0}) + "\n", encoding="utf-8")
    with pytest.raises(FormatError, match="missing columns"):
        read_manifest(p)
    p.write_text("{broken\n", encoding="utf-8")
    with pytest.raises(FormatError):
        read_manifest(p)


def test_manifest_video_past_end_of_file(tmp_path: Path, rng):
    manifest = write_feature_sequences(_videos(rng), tmp_path, "x")
    data = tmp_path / "x.f32"
    data.write_bytes(data.read_bytes()[:-8])
    with pytest.raises(FormatError, match="past end"):
        load_feature_sequences(manifest)


def test_manifest_non_finite(tmp_path: Path):
    row = {c: 0 for c in MANIFEST_COLUMNS}
    row.update(video_id="v", num_frames=1, dim=2, stream="fused", data_file="d.f32")
    (tmp_path / "m.jsonl").write_text(json.dumps(row) + "\n", encoding="utf-8")
    (tmp_path / "d.f32").write_bytes(np.array([1.0, np.nan], dtype="<f4").tobytes())
    with pytest.raises(NonFiniteInput):
        load_feature_sequences(tmp_path / "m.jsonl")


@pytest.mark.parametrize(
    ("field", "value", "match"),
    [
        ("stream", "rgb", "unknown stream"),
        ("dim", "two", "not integer"),
        ("num_frames", 1.5, "not integer"),
        ("label", None, "not integer"),
        ("byte_offset", -4, "negative"),
    ],
)
def test_manifest_bad_values(tmp_path: Path, rng, field: str, value, match: str):
    manifest = write_feature_sequences(_videos(rng), tmp_path, "x")
    rows = [json.loads(ln) for ln in manifest.read_text("utf-8").splitlines()]
    rows[1][field] = value
    manifest.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    with pytest.raises(FormatError, match=match):
        load_feature_sequences(manifest)


def test_flow_values(tmp_path: Path):
    p = write_flow_values(np.array([0.5, 128.0, 3.25]), tmp_path / "flow.txt")
    assert np.array_equal(read_flow_values(p), [0.5, 128.0, 3.25])
    p.write_text("1.0\n\n2.0\n", encoding="utf-8")
    assert np.array_equal(read_flow_values(p), [1.0, 2.0])
    p.write_text("1.0\nabc\n", encoding="utf-8")
    with pytest.raises(FormatError, match=":2:"):
        read_flow_values(p)
    with pytest.raises(FormatError):
        read_flow_values(tmp_path / "missing.txt")
