from __future__ import annotations

import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Annotated, Any

try:  # 新版 typer 内置 click 副本
    from typer import _click as click
except ImportError:
    import click
import numpy as np
import pandas as pd
import typer

from action_words.config import DEFAULT_CONFIG, RunConfig, build_run_config
from action_words.errors import ActionWordError, DataError, FormatError
from aw_data.binary import atomic_write_text
from aw_data.loaders import load_feature_sequences, read_flow_values, write_feature_sequences
from codebook.kmeans import kmeans_fit
from codebook.store import load_codebook, save_codebook
from encoding.embedding import table_random
from encoding.sentences import (
    EncodedCorpus,
    WordSequence,
    encode_split,
    load_encoded_corpus,
    read_sentences,
    save_encoded_corpus,
)
from features.flow import estimate_ratio, flow_stats, ratio_threshold
from features.fusion import fit_stream_pcas, fuse_corpus
from features.pca import pca_fit, pca_project, reconstruction_error, save_pca
from features.sequence import FeatureSequence, length_stats, stack_frames
from metrics.report import Report, emit_report, read_report, write_sweep_csv
from models.baselines import fit_histogram_baseline, histogram_accuracy
from models.base import SequenceClassifier
from models.checkpoint import load_checkpoint, save_checkpoint
from models.clstm import ClstmConfig, build_clstm
from models.evaluation import predict_proba, prediction_curve, prefix, recognition_accuracy
from models.synthetic import (
    SynthParams,
    generate_synthetic_dataset,
    render_features,
    word_prototypes,
)
from models.tcnn import TcnnConfig, build_tcnn
from models.training import TrainConfig, train as train_model

logger = logging.getLogger(__name__)

app = typer.Typer(add_completion=False, help="ActionWords：视频特征 → 词序列 → T-CNN/C-LSTM 识别与早期预测")

SPLITS = ("train", "test")
CHECKPOINT_FILE = "model.bin"
HISTORY_FILE = "history.csv"

ConfigOpt = Annotated[Path, typer.Option("--config", help="YAML 配置文件（flags 优先）")]
SeedOpt = Annotated[int | None, typer.Option("--seed", help="根随机种子；各阶段种子由其派生")]
ThreadsOpt = Annotated[int | None, typer.Option("--threads", help="并行线程数（结果与线程数无关）")]


def _write_json(path: Path, payload: dict[str, Any]) -> Path:
    return atomic_write_text(path, json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n")


def _load_split(data: Path, split: str) -> list[FeatureSequence]:
    manifest = data / f"{split}.jsonl"
    if not manifest.exists():
        raise FormatError(f"{data}: missing {split}.jsonl feature manifest")
    return load_feature_sequences(manifest)


def _dataset_stats(splits: dict[str, list[FeatureSequence]]) -> dict[str, Any]:
    labels = {s.label for seqs in splits.values() for s in seqs}
    dims = {s.dim for seqs in splits.values() for s in seqs}
    if len(dims) > 1:
        raise DataError(f"mixed feature dims across splits: {sorted(dims)}")
    return {
        "num_classes": len(labels),
        "dim": dims.pop() if dims else 0,
        **{name: length_stats(seqs) for name, seqs in splits.items()},
    }


def _write_feature_dataset(out: Path, splits: dict[str, list[FeatureSequence]]) -> dict[str, Any]:
    for name, seqs in splits.items():
        write_feature_sequences(seqs, out, name)
    stats = _dataset_stats(splits)
    _write_json(out / "stats.json", stats)
    return stats


def _checkpoint_path(model: Path) -> Path:
    return model / CHECKPOINT_FILE if model.is_dir() else model


def _build_model(cfg: RunConfig, corpus: EncodedCorpus) -> SequenceClassifier:
    C, D = corpus.num_classes, corpus.table.dim
    kwargs: dict[str, Any] = dict(seed=cfg.seed_for("init"), train_embedding=cfg.train_embedding)
    if cfg.model == "tcnn":
        tc = TcnnConfig(
            widths=cfg.tcnn_widths,
            filters=cfg.tcnn_filters,
            dropout=cfg.tcnn_dropout,
            hidden=cfg.tcnn_hidden,
            masked_pooling=cfg.tcnn_masked_pooling,
        )
        return build_tcnn(C, D, corpus.table, tc, **kwargs)
    cc = ClstmConfig(
        width=cfg.clstm_width,
        filters=cfg.clstm_filters,
        hidden=cfg.clstm_hidden,
        dropout=cfg.clstm_dropout,
        masked_last_state=cfg.clstm_masked_last_state,
    )
    return build_clstm(C, D, corpus.table, cc, **kwargs)


def _encoding_echo(meta: dict[str, Any]) -> dict[str, Any]:
    keys = ("mode", "init_mode", "K", "k", "beta", "vocab_size", "dim")
    return {k: meta[k] for k in keys if k in meta}


@app.callback()
def main_callback(
    verbose: Annotated[bool, typer.Option("--verbose", "-v", help="DEBUG 级别日志")] = False,
) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO, format="%(levelname)s %(message)s"
    )
    if verbose:
        logging.getLogger().setLevel(logging.DEBUG)


@app.command()
def ingest(
    train: Annotated[Path, typer.Option(help="训练集特征清单 (.jsonl)")],
    test: Annotated[Path, typer.Option(help="测试集特征清单 (.jsonl)")],
    out: Annotated[Path, typer.Option(help="输出数据目录")],
) -> None:
    """
    读取并校验特征清单，写出规范化数据目录（train/test + stats.json）。
    """
    splits = {"train": load_feature_sequences(train), "test": load_feature_sequences(test)}
    stats = _write_feature_dataset(out, splits)
    typer.echo(json.dumps(stats, sort_keys=True))


@app.command()
def pca(
    data: Annotated[Path, typer.Option(help="数据目录（train.jsonl 用于拟合）")],
    out: Annotated[Path, typer.Option(help="PCA 模型文件")],
    dim: Annotated[int | None, typer.Option("--dim", help="保留主成分数")] = None,
    project: Annotated[Path | None, typer.Option(help="可选：投影后的数据目录")] = None,
    config: ConfigOpt = DEFAULT_CONFIG,
) -> None:
    """在训练帧上拟合 PCA；可选把 train/test 投影到新目录。"""
    cfg = build_run_config(config, {"pca_dim": dim})
    train_seqs = _load_split(data, "train")
    X = stack_frames(train_seqs)
    model = pca_fit(X, cfg.pca_dim or X.shape[1])
    save_pca(model, out)
    summary = {
        "in_dim": model.in_dim,
        "out_dim": model.out_dim,
        "explained_variance_ratio": float(
            model.explained_variance.sum() / max(float(np.var(X, axis=0, ddof=1).sum()), 1e-300)
        ),
        "reconstruction_error": reconstruction_error(model, X),
    }
    if project is not None:
        splits = {
            name: [
                FeatureSequence(
                    video_id=s.video_id,
                    label=s.label,
                    frames=pca_project(model, s.frames),
                    stream=s.stream,
                )
                for s in (train_seqs if name == "train" else _load_split(data, name))
            ]
            for name in SPLITS
        }
        _write_feature_dataset(project, splits)
    typer.echo(json.dumps(summary, sort_keys=True))


@app.command()
def fuse(
    temporal: Annotated[Path, typer.Option(help="时间流（光流）数据目录")],
    spatial: Annotated[Path, typer.Option(help="空间流（RGB）数据目录")],
    out: Annotated[Path, typer.Option(help="融合后的数据目录")],
    ratio: Annotated[float | None, typer.Option(help="时间流占比 r")] = None,
    fused_dim: Annotated[int | None, typer.Option("--dim", help="融合维度 D'")] = None,
    ratio_file: Annotated[
        Path | None, typer.Option(help="ratio 子命令输出的 JSON；提供时取其中 ratio")
    ] = None,
    config: ConfigOpt = DEFAULT_CONFIG,
) -> None:
    """两流 PCA 后按比例 r 拼接（时间流在前）。"""
    if ratio_file is not None and ratio is None:
        try:
            ratio = float(json.loads(ratio_file.read_text(encoding="utf-8"))["ratio"])
        except (OSError, KeyError, ValueError) as e:
            raise FormatError(f"{ratio_file}: cannot read ratio ({e})") from e
    cfg = build_run_config(config, {"ratio": ratio, "fused_dim": fused_dim})
    fcfg = cfg.fusion_config()
    t_train, s_train = _load_split(temporal, "train"), _load_split(spatial, "train")
    pca_t, pca_s = fit_stream_pcas(t_train, s_train, fcfg)
    save_pca(pca_t, out / "pca_temporal.bin")
    save_pca(pca_s, out / "pca_spatial.bin")
    splits = {
        "train": fuse_corpus(t_train, s_train, fcfg, pca_t, pca_s),
        "test": fuse_corpus(
            _load_split(temporal, "test"), _load_split(spatial, "test"), fcfg, pca_t, pca_s
        ),
    }
    stats = _write_feature_dataset(out, splits)
    n_t, n_s = fcfg.split()
    typer.echo(json.dumps({"n_temporal": n_t, "n_spatial": n_s, **stats}, sort_keys=True))


@app.command()
def ratio(
    flow: Annotated[Path, typer.Option(help="每帧光流平均幅值文件（每行一个数）")],
    mode: Annotated[str | None, typer.Option(help="mu_all / mu_under / half_mu_under")] = None,
    out: Annotated[Path | None, typer.Option(help="可选：写出 JSON")] = None,
    config: ConfigOpt = DEFAULT_CONFIG,
) -> None:
    """由光流统计估计融合比例 r。"""
    cfg = build_run_config(config, {"ratio_mode": mode})
    stats = flow_stats(read_flow_values(flow))
    payload = {
        "mode": cfg.ratio_mode.value,
        "num_frames": stats.num_frames,
        "mu_all": stats.mu_all,
        "mu_under": stats.mu_under,
        "threshold": ratio_threshold(stats, cfg.ratio_mode),
        "ratio": estimate_ratio(stats, cfg.ratio_mode),
    }
    if out is not None:
        _write_json(out, payload)
    typer.echo(json.dumps(payload, sort_keys=True))


@app.command()
def codebook(
    data: Annotated[Path, typer.Option(help="数据目录（train.jsonl 用于聚类）")],
    out: Annotated[Path, typer.Option(help="码本文件")],
    size: Annotated[int | None, typer.Option("--K", "--size", help="码本大小 K")] = None,
    max_iter: Annotated[int | None, typer.Option(help="Lloyd 最大迭代次数")] = None,
    seed: SeedOpt = None,
    threads: ThreadsOpt = None,
    config: ConfigOpt = DEFAULT_CONFIG,
) -> None:
    """k-means++ 初始化 + Lloyd 迭代构建码本。"""
    cfg = build_run_config(config, {"K": size, "max_iter": max_iter, "seed": seed, "threads": threads})
    X = stack_frames(_load_split(data, "train"))
    cb = kmeans_fit(
        X, cfg.K, seed=cfg.seed_for("codebook"), max_iter=cfg.max_iter, rel_tol=cfg.rel_tol, threads=cfg.threads
    )
    save_codebook(cb, out)
    typer.echo(
        json.dumps(
            {"K": cb.K, "dim": cb.dim, "distortion": cb.distortion, "iterations": len(cb.distortion_history) - 1},
            sort_keys=True,
        )
    )


@app.command()
def encode(
    data: Annotated[Path, typer.Option(help="特征数据目录")],
    out: Annotated[Path, typer.Option(help="词序列输出目录")],
    codebook_path: Annotated[Path | None, typer.Option("--codebook", help="码本文件（DA 不需要）")] = None,
    mode: Annotated[str | None, typer.Option(help="ha / sa / da")] = None,
    init: Annotated[str | None, typer.Option(help="codeword / random / direct")] = None,
    k: Annotated[int | None, typer.Option("--k", help="SA 近邻数 k")] = None,
    beta: Annotated[float | None, typer.Option(help="SA 核参数 β（默认随码本自动缩放）")] = None,
    seed: SeedOpt = None,
    threads: ThreadsOpt = None,
    config: ConfigOpt = DEFAULT_CONFIG,
) -> None:
    """把帧特征编码为 ActionWord 序列，并生成词向量表。"""
    overrides: dict[str, Any] = {"mode": mode, "init": init, "k": k, "beta": beta, "seed": seed, "threads": threads}
    cb = load_codebook(codebook_path) if codebook_path is not None else None
    if cb is not None:
        overrides["K"] = cb.K
    cfg = build_run_config(config, overrides)
    if cb is None and cfg.mode.value != "da":
        raise typer.BadParameter(f"--codebook is required for mode {cfg.mode.value}")
    corpus = encode_split(
        _load_split(data, "train"),
        _load_split(data, "test"),
        cfg.mode,
        cfg.init,
        codebook=cb,
        sa_cfg=cfg.sa_config(),
        seed=cfg.seed_for("embedding"),
        threads=cfg.threads,
    )
    save_encoded_corpus(corpus, out)
    typer.echo(json.dumps(_encoding_echo(corpus.meta), sort_keys=True))


@app.command()
def train(
    data: Annotated[Path, typer.Option(help="词序列目录（encode 或 synth 的输出）")],
    out: Annotated[Path, typer.Option(help="模型输出目录")],
    model: Annotated[str | None, typer.Option(help="tcnn / clstm")] = None,
    epochs: Annotated[int | None, typer.Option(help="训练轮数")] = None,
    batch_size: Annotated[int | None, typer.Option(help="mini-batch 大小")] = None,
    lr: Annotated[float | None, typer.Option(help="RMSProp 学习率")] = None,
    l_max: Annotated[int | None, typer.Option(help="句长 l_max（默认最长训练句）")] = None,
    filters: Annotated[int | None, typer.Option(help="每个卷积层的滤波器数")] = None,
    hidden: Annotated[int | None, typer.Option(help="T-CNN fc1 / C-LSTM 每层隐藏单元数")] = None,
    freeze_embedding: Annotated[bool, typer.Option(help="冻结词向量表")] = False,
    masked: Annotated[bool, typer.Option(help="池化/末状态忽略纯填充窗口")] = False,
    seed: SeedOpt = None,
    threads: ThreadsOpt = None,
    config: ConfigOpt = DEFAULT_CONFIG,
) -> None:
    """训练 T-CNN 或 C-LSTM；写出 model.bin 与 history.csv。"""
    overrides: dict[str, Any] = {
        "model": model,
        "epochs": epochs,
        "batch_size": batch_size,
        "lr": lr,
        "l_max": l_max,
        "seed": seed,
        "threads": threads,
        "train_embedding": False if freeze_embedding else None,
        "tcnn_masked_pooling": True if masked else None,
        "clstm_masked_last_state": True if masked else None,
    }
    base = build_run_config(config, overrides)
    if filters is not None:
        overrides["tcnn_filters"] = (filters,) * len(base.tcnn_widths)
        overrides["clstm_filters"] = filters
    if hidden is not None:
        overrides["tcnn_hidden"] = hidden
        overrides["clstm_hidden"] = (hidden,) * len(base.clstm_hidden)
    cfg = build_run_config(config, overrides)

    corpus = load_encoded_corpus(data)
    net = _build_model(cfg, corpus)
    net.meta.update({"encoding": _encoding_echo(corpus.meta)})
    tcfg = TrainConfig(
        batch_size=cfg.batch_size,
        epochs=cfg.epochs,
        lr=cfg.lr,
        seed=cfg.seed_for("train"),
        l_max=cfg.l_max,
        train_embedding=cfg.train_embedding,
        shard_size=cfg.shard_size,
        threads=cfg.threads,
    )
    started = time.perf_counter()
    result = train_model(net, corpus.train, corpus.test, tcfg)
    elapsed = time.perf_counter() - started

    train_echo = {
        k: v
        for k, v in cfg.echo().items()
        if k in ("seed", "epochs", "batch_size", "lr", "l_max", "train_embedding", "shard_size")
    }
    extra = {
        "data_dir": os.path.relpath(data.resolve(), out.resolve()),
        "train": train_echo,
    }
    save_checkpoint(result.model, out / CHECKPOINT_FILE, extra=extra)
    atomic_write_text(out / HISTORY_FILE, result.history.to_csv(index=False, lineterminator="\n"))
    last = result.history.iloc[-1]
    logger.info("trained %s in %.1fs", cfg.model, elapsed)
    typer.echo(
        json.dumps(
            {
                "model": cfg.model,
                "epochs": int(last["epoch"]),
                "train_loss": float(last["train_loss"]),
                "train_acc": float(last["train_acc"]),
                "val_acc": float(last["val_acc"]),
            },
            sort_keys=True,
        )
    )


def _load_model_and_corpus(
    model_path: Path, data: Path | None
) -> tuple[SequenceClassifier, dict[str, Any], EncodedCorpus]:
    ckpt = _checkpoint_path(model_path)
    net, extra = load_checkpoint(ckpt)
    if data is None:
        if "data_dir" not in extra:
            raise FormatError(f"{ckpt}: no data directory recorded; pass --data")
        data = (ckpt.parent / extra["data_dir"]).resolve()
    return net, extra, load_encoded_corpus(data)


@app.command("eval")
def evaluate(
    model: Annotated[Path, typer.Option(help="模型目录或 model.bin")],
    data: Annotated[Path | None, typer.Option(help="词序列目录（默认取训练时的目录）")] = None,
    curve: Annotated[bool, typer.Option(help="同时计算 10 段早期预测曲线")] = False,
    out: Annotated[Path | None, typer.Option(help="报告文件（默认 <model>/report.json）")] = None,
    fmt: Annotated[str | None, typer.Option("--format", help="json / csv（默认按后缀）")] = None,
    timing: Annotated[bool, typer.Option(help="报告中记录耗时（报告不再逐字节可复现）")] = False,
    threads: ThreadsOpt = None,
) -> None:
    """测试集识别准确率、直方图基线，以及可选的早期预测曲线。"""
    started = time.perf_counter()
    n_threads = threads or 1
    net, extra, corpus = _load_model_and_corpus(model, data)
    acc = recognition_accuracy(net, corpus.test, threads=n_threads)
    baseline = fit_histogram_baseline(corpus.train, net.num_classes)
    report = Report(
        metrics={
            "recognition_accuracy": acc,
            "histogram_accuracy": histogram_accuracy(baseline, corpus.test),
            "num_test": float(len(corpus.test)),
            "num_classes": float(net.num_classes),
        },
        config={
            "architecture": net.kind,
            "model": net.config_dict(),
            "l_max": net.l_max,
            "encoding": net.meta.get("encoding", _encoding_echo(corpus.meta)),
            "train": extra.get("train", {}),
        },
    )
    if curve:
        report.curve = prediction_curve(net, corpus.test, threads=n_threads).as_dict()
    if timing:
        report.timing = {"eval": time.perf_counter() - started}
    target = out or (model if model.is_dir() else model.parent) / "report.json"
    emit_report(report, target, fmt)
    typer.echo(json.dumps(report.to_dict()["metrics"], sort_keys=True))


@app.command()
def predict(
    model: Annotated[Path, typer.Option(help="模型目录或 model.bin")],
    ids: Annotated[str | None, typer.Option(help="逗号分隔的词 id 序列")] = None,
    sentences: Annotated[Path | None, typer.Option(help="词序列文件 (.jsonl)")] = None,
    fraction: Annotated[float, typer.Option(help="只观察前 fraction 比例的词")] = 1.0,
    out: Annotated[Path | None, typer.Option(help="预测结果 CSV")] = None,
) -> None:
    """对单个序列或序列文件给出类别与概率。"""
    if (ids is None) == (sentences is None):
        raise typer.BadParameter("pass exactly one of --ids / --sentences")
    net, _ = load_checkpoint(_checkpoint_path(model))
    if ids is not None:
        try:
            words = tuple(int(t) for t in ids.split(",") if t.strip())
        except ValueError as e:
            raise typer.BadParameter(f"--ids: {e}") from e
        seqs = [WordSequence(ids=words, video_id="cli")]
    else:
        seqs = read_sentences(sentences)  # type: ignore[arg-type]
    seqs = [prefix(s, fraction) for s in seqs]
    p = predict_proba(net, seqs)
    pred = np.argmax(p, axis=1)
    df = pd.DataFrame(
        {
            "video_id": [s.video_id for s in seqs],
            "label": [s.label for s in seqs],
            "predicted": pred,
            **{f"p_{c}": p[:, c] for c in range(p.shape[1])},
        }
    )
    if out is not None:
        atomic_write_text(out, df.to_csv(index=False, lineterminator="\n"))
    if len(seqs) == 1:
        typer.echo(json.dumps({"predicted": int(pred[0]), "probabilities": p[0].tolist()}))
    else:
        typer.echo(json.dumps({"num_sequences": len(seqs), "predicted_counts": np.bincount(pred, minlength=p.shape[1]).tolist()}))


@app.command()
def synth(
    out: Annotated[Path, typer.Option(help="输出目录")],
    classes: Annotated[int | None, typer.Option(help="类别数 C")] = None,
    vocab: Annotated[int | None, typer.Option(help="词表大小 V")] = None,
    mean_length: Annotated[float | None, typer.Option(help="平均句长")] = None,
    train_per_class: Annotated[int | None, typer.Option(help="每类训练序列数")] = None,
    test_per_class: Annotated[int | None, typer.Option(help="每类测试序列数")] = None,
    dim: Annotated[int | None, typer.Option(help="随机词向量维度 D")] = None,
    seed: SeedOpt = None,
    config: ConfigOpt = DEFAULT_CONFIG,
) -> None:
    """
    生成顺序敏感的合成数据集：帧特征（train/test 清单）+ 真值词序列与随机词向量表。
    """
    cfg = build_run_config(
        config,
        {
            "synth_classes": classes,
            "synth_vocab": vocab,
            "synth_mean_length": mean_length,
            "synth_train_per_class": train_per_class,
            "synth_test_per_class": test_per_class,
            "synth_dim": dim,
            "seed": seed,
        },
    )
    params = SynthParams(
        num_classes=cfg.synth_classes,
        vocab=cfg.synth_vocab,
        mean_length=cfg.synth_mean_length,
        min_length=cfg.synth_min_length,
        train_per_class=cfg.synth_train_per_class,
        test_per_class=cfg.synth_test_per_class,
        mix=cfg.synth_mix,
        feature_dim=cfg.synth_feature_dim,
        feature_noise=cfg.synth_feature_noise,
    )
    train_words, test_words = generate_synthetic_dataset(params, seed=cfg.seed_for("synth"))

    feat_seed = cfg.seed_for("features")
    protos = word_prototypes(params.vocab, params.feature_dim, feat_seed)
    splits = {
        "train": render_features(train_words, protos, params.feature_noise, feat_seed + 1),
        "test": render_features(test_words, protos, params.feature_noise, feat_seed + 2),
    }
    stats = _write_feature_dataset(out, splits)

    table = table_random(params.vocab, cfg.synth_dim, cfg.seed_for("embedding"))
    meta = {
        "mode": "ground_truth",
        "init_mode": table.init_mode.value,
        "num_classes": params.num_classes,
        "vocab_size": table.vocab_size,
        "dim": table.dim,
        "train": stats["train"],
        "test": stats["test"],
    }
    save_encoded_corpus(EncodedCorpus(train=train_words, test=test_words, table=table, meta=meta), out)
    _write_json(out / "synth.json", {"params": cfg.echo(), "stats": stats})
    typer.echo(json.dumps(stats, sort_keys=True))


@app.command()
def report(
    inputs: Annotated[list[Path], typer.Option("--input", "-i", help="报告文件，可重复")],
    out: Annotated[Path, typer.Option(help="输出文件")],
    fmt: Annotated[str | None, typer.Option("--format", help="json / csv（默认按后缀）")] = None,
) -> None:
    """单个报告：JSON/CSV 互转；多个报告：合并为一张参数扫描 CSV。"""
    if len(inputs) == 1:
        emit_report(read_report(inputs[0]), out, fmt)
    else:
        write_sweep_csv(inputs, out)
    typer.echo(str(out))


def _error_line(name: str, code: int, message: str) -> None:
    typer.echo(
        json.dumps({"error": name, "exit_code": code, "message": message}, ensure_ascii=False),
        err=True,
    )


def run(argv: list[str] | None = None) -> int:
    """
    运行一个子命令，返回退出码（0 成功，2 用法，3 数据，4 数值）。
    失败时向 stderr 输出一行 JSON。
    """
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        rv = app(args=args, prog_name="actionwords", standalone_mode=False)
    except click.exceptions.UsageError as e:
        _error_line("UsageError", 2, e.format_message())
        return 2
    except click.exceptions.Exit as e:
        return int(e.exit_code or 0)
    except click.exceptions.Abort:
        _error_line("Abort", 1, "aborted")
        return 1
    except ActionWordError as e:
        _error_line(type(e).__name__, e.exit_code, str(e))
        return e.exit_code
    return int(rv) if isinstance(rv, int) else 0


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
