from __future__ import annotations

import logging
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd

from action_words.errors import BadConfig, EmptyDataset, LabelOutOfRange, NonFiniteLoss
from encoding.sentences import WordSequence, batch_ids
from models.base import EMBEDDING, SequenceClassifier
from models.evaluation import recognition_accuracy
from nn import layers
from nn.graph import apply, backward
from nn.optim import RmsProp

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = ["epoch", "train_loss", "train_acc", "val_acc"]


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    epochs: int = 100
    lr: float = 1e-4
    rho: float = 0.9
    eps: float = 1e-8
    seed: int = 0  # 用于打乱与 dropout；初始化在构建模型时单独播种
    l_max: int | None = None  # None：取最长训练句
    train_embedding: bool = True
    shard_size: int = 16  # 每个梯度分片的样本数；固定值，结果与线程数无关
    threads: int = 1

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise BadConfig(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise BadConfig(f"epochs must be >= 1, got {self.epochs}")
        if self.l_max is not None and self.l_max < 1:
            raise BadConfig(f"l_max must be >= 1, got {self.l_max}")
        if self.shard_size < 1 or self.threads < 1:
            raise BadConfig("shard_size and threads must be >= 1")


@dataclass
class TrainResult:
    model: SequenceClassifier
    history: pd.DataFrame


def check_labels(seqs: list[WordSequence], num_classes: int) -> None:
    bad = [s for s in seqs if not 0 <= s.label < num_classes]
    if bad:
        raise LabelOutOfRange(
            f"{len(bad)} sequences with labels outside [0, {num_classes}), e.g. {bad[0].label}"
        )


def loss_and_gradients(
    model: SequenceClassifier,
    ids: np.ndarray,
    lengths: np.ndarray,
    labels: np.ndarray,
    *,
    training: bool,
    rng: np.random.Generator | None = None,
    denom: float | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """Σ CE / denom 及其对每个参数（含词向量表）的梯度。"""
    logits = model.graph_from_ids(ids, lengths, training=training, rng=rng)
    loss = apply(
        layers.softmax_xent_forward,
        layers.softmax_xent_backward,
        logits,
        labels=labels,
        denom=float(denom if denom is not None else len(labels)),
    )
    grads = backward(loss)
    return float(loss.value), grads


def batch_gradients(
    model: SequenceClassifier,
    ids: np.ndarray,
    lengths: np.ndarray,
    labels: np.ndarray,
    *,
    shard_size: int,
    rng_key: tuple[int, ...],
    pool: ThreadPoolExecutor | None = None,
) -> tuple[float, dict[str, np.ndarray]]:
    """
    mini-batch 的损失/梯度，按固定顺序对 `shard_size` 大小的分片求和。
    第 s 个分片的 dropout 掩码取自种子序列 rng_key + (s,)。
    """
    n = len(labels)
    starts = list(range(0, n, shard_size))

    def _shard(s: int) -> tuple[float, dict[str, np.ndarray]]:
        sl = slice(starts[s], starts[s] + shard_size)
        rng = np.random.default_rng([*rng_key, s])
        return loss_and_gradients(
            model, ids[sl], lengths[sl], labels[sl], training=True, rng=rng, denom=n
        )

    parts = list(pool.map(_shard, range(len(starts)))) if pool else [_shard(s) for s in range(len(starts))]
    loss = 0.0
    grads: dict[str, np.ndarray] = {}
    for part_loss, part in parts:
        loss += part_loss
        for k, g in part.items():
            grads[k] = g if k not in grads else grads[k] + g
    return loss, grads


def train(
    model: SequenceClassifier,
    train_set: list[WordSequence],
    val_set: list[WordSequence] | None,
    cfg: TrainConfig,
    *,
    on_epoch: Callable[[dict[str, float]], None] | None = None,
) -> TrainResult:
    """
    以平均交叉熵为目标的 mini-batch RMSProp。给定 cfg.seed 与模型初始化时结果确定，
    与 `threads` 无关。
    """
    if not train_set:
        raise EmptyDataset("empty training set")
    check_labels(train_set, model.num_classes)
    if val_set:
        check_labels(val_set, model.num_classes)

    l_max = cfg.l_max or max(model.min_length, max(s.num_real for s in train_set))
    model.l_max = int(l_max)
    model.train_embedding = cfg.train_embedding
    ids, lengths = batch_ids(train_set, model.l_max)
    labels = np.asarray([s.label for s in train_set], dtype=np.int64)
    n = len(train_set)

    opt = RmsProp(lr=cfg.lr, rho=cfg.rho, eps=cfg.eps)
    rows: list[dict[str, float]] = []
    pool = ThreadPoolExecutor(max_workers=cfg.threads) if cfg.threads > 1 else None
    try:
        for epoch in range(1, cfg.epochs + 1):
            perm = np.random.default_rng([cfg.seed, epoch]).permutation(n)
            total = 0.0
            for bi, start in enumerate(range(0, n, cfg.batch_size)):
                idx = perm[start : start + cfg.batch_size]
                loss, grads = batch_gradients(
                    model,
                    ids[idx],
                    lengths[idx],
                    labels[idx],
                    shard_size=cfg.shard_size,
                    rng_key=(cfg.seed, epoch, bi),
                    pool=pool,
                )
                if not np.isfinite(loss):
                    raise NonFiniteLoss(f"epoch {epoch} batch {bi}: loss is {loss}")
                if not cfg.train_embedding:
                    grads.pop(EMBEDDING, None)
                opt.step(model.params, grads)
                total += loss * len(idx)

            row = {
                "epoch": epoch,
                "train_loss": total / n,
                "train_acc": recognition_accuracy(model, train_set, threads=cfg.threads),
                "val_acc": (
                    recognition_accuracy(model, val_set, threads=cfg.threads)
                    if val_set
                    else float("nan")
                ),
            }
            rows.append(row)
            logger.info(
                "epoch %d/%d: loss=%.4f train_acc=%.4f val_acc=%.4f",
                epoch,
                cfg.epochs,
                row["train_loss"],
                row["train_acc"],
                row["val_acc"],
            )
            if on_epoch is not None:
                on_epoch(row)
    finally:
        if pool is not None:
            pool.shutdown()

    history = pd.DataFrame(rows, columns=HISTORY_COLUMNS)
    return TrainResult(model=model, history=history)
