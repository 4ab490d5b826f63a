from __future__ import annotations

import json
import logging
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import pandas as pd

from action_words.errors import FormatError
from aw_data.binary import atomic_write_text

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CSV_COLUMNS = ["metric", "value"]
CURVE_PREFIX = "curve@"


@dataclass
class Report:
    """
    metrics：扁平的数值指标（recognition_accuracy、histogram_accuracy、num_test 等）
    curve：前缀比例（"0.1" … "1.0"）-> 准确率
    config：运行配置回显（仅 JSON）
    timing：耗时（秒），仅在要求时出现
    """

    metrics: dict[str, float] = field(default_factory=dict)
    curve: dict[str, float] = field(default_factory=dict)
    config: dict[str, Any] = field(default_factory=dict)
    timing: dict[str, float] | None = None

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "metrics": dict(self.metrics),
            "curve": dict(self.curve),
            "config": dict(self.config),
        }
        if self.timing is not None:
            payload["timing"] = dict(self.timing)
        return payload

    @classmethod
    def from_dict(cls, payload: dict[str, Any]) -> Report:
        version = payload.get("schema_version")
        if version != SCHEMA_VERSION:
            raise FormatError(f"unsupported report schema_version {version}")
        return cls(
            metrics={k: float(v) for k, v in payload.get("metrics", {}).items()},
            curve={k: float(v) for k, v in payload.get("curve", {}).items()},
            config=dict(payload.get("config", {})),
            timing=payload.get("timing"),
        )


def report_frame(report: Report) -> pd.DataFrame:
    """`metric,value` 数值行：先按名字排序的 metrics，再是 `curve@<fraction>`。"""
    rows = [(k, float(report.metrics[k])) for k in sorted(report.metrics)]
    rows += [(f"{CURVE_PREFIX}{k}", float(v)) for k, v in sorted(report.curve.items(), key=lambda kv: float(kv[0]))]
    if report.timing:
        rows += [(f"seconds@{k}", float(v)) for k, v in sorted(report.timing.items())]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def emit_report(report: Report, path: str | Path, fmt: str | None = None) -> Path:
    """写 JSON（`fmt="json"`）或 CSV（`fmt="csv"`）；默认按文件后缀判断。"""
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".") or "json").lower()
    if fmt == "json":
        text = json.dumps(report.to_dict(), ensure_ascii=False, indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        text = report_frame(report).to_csv(index=False, lineterminator="\n")
    else:
        raise FormatError(f"unknown report format {fmt!r}")
    out = atomic_write_text(path, text)
    logger.info("wrote report %s", out)
    return out


def read_report(path: str | Path) -> Report:
    path = Path(path)
    if not path.exists():
        raise FormatError(f"report not found: {path}")
    if path.suffix.lower() == ".csv":
        df = pd.read_csv(path, float_precision="round_trip")
        if list(df.columns) != CSV_COLUMNS:
            raise FormatError(f"{path}: expected columns {CSV_COLUMNS}, got {list(df.columns)}")
        rep = Report()
        for name, value in zip(df["metric"].astype(str), df["value"].astype(float)):
            if name.startswith(CURVE_PREFIX):
                rep.curve[name[len(CURVE_PREFIX) :]] = float(value)
            elif name.startswith("seconds@"):
                rep.timing = rep.timing or {}
                rep.timing[name[len("seconds@") :]] = float(value)
            else:
                rep.metrics[name] = float(value)
        return rep
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: {e}") from e
    return Report.from_dict(payload)


def _flatten(prefix: str, obj: Any, out: dict[str, Any]) -> None:
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(obj, (list, tuple)):
        out[prefix] = json.dumps(list(obj))
    else:
        out[prefix] = obj


def merge_reports(paths: Iterable[str | Path]) -> pd.DataFrame:
    """
    每个报告一行：`run`、配置回显列、各指标，然后是 curve_0.1 .. curve_1.0。
    可直接用于参数扫描与早期预测画图。
    """
    rows = []
    for p in paths:
        rep = read_report(p)
        row: dict[str, Any] = {"run": Path(p).stem}
        _flatten("", rep.config, row)
        row.update(rep.metrics)
        row.update({f"curve_{k}": v for k, v in sorted(rep.curve.items(), key=lambda kv: float(kv[0]))})
        rows.append(row)
    return pd.DataFrame(rows)


def write_sweep_csv(paths: Iterable[str | Path], out_path: str | Path) -> Path:
    return atomic_write_text(out_path, merge_reports(paths).to_csv(index=False, lineterminator="\n"))
