"""
解析梯度与中心有限差分对比（步长 1e-5，float64，相对误差 <= 1e-4）。
"""

from __future__ import annotations

from collections.abc import Callable

import numpy as np
import pytest

from encoding.embedding import table_random
from encoding.sentences import WordSequence, batch_ids
from models.base import EMBEDDING
from models.clstm import ClstmConfig, build_clstm
from models.tcnn import TcnnConfig, build_tcnn
from models.training import loss_and_gradients
from nn import layers
from nn.gradcheck import check_gradients, numerical_gradient, relative_error
from nn.lstm import lstm_backward, lstm_forward

TOL = 1e-4


def _check_kernel(
    forward: Callable, backward: Callable, inputs: list[np.ndarray], rng: np.random.Generator, **kwargs
) -> None:
    out, cache = forward(*inputs, **kwargs)
    R = rng.normal(size=np.shape(out))
    grads = backward(R, cache)

    def loss() -> float:
        return float(np.sum(forward(*inputs, **kwargs)[0] * R))

    for x, g in zip(inputs, grads):
        num = numerical_gradient(loss, x)
        assert relative_error(g, num).max() <= TOL


def test_conv1d_gradients(rng):
    _check_kernel(
        layers.conv1d_forward,
        layers.conv1d_backward,
        [rng.normal(size=(2, 3, 7)), rng.normal(size=(4, 3, 3)), rng.normal(size=4)],
        rng,
    )


def test_dense_gradients(rng):
    _check_kernel(
        layers.dense_forward,
        layers.dense_backward,
        [rng.normal(size=(3, 5)), rng.normal(size=(4, 5)), rng.normal(size=4)],
        rng,
    )


def test_relu_gradients(rng):
    x = rng.normal(size=(4, 6))
    x[np.abs(x) < 1e-3] = 0.5  # 避开不可导点
    _check_kernel(layers.relu_forward, layers.relu_backward, [x], rng)


def test_max_pool_gradients(rng):
    _check_kernel(layers.global_max_pool_forward, layers.global_max_pool_backward, [rng.normal(size=(2, 3, 6))], rng)


def test_masked_max_pool_gradients(rng):
    _check_kernel(
        layers.global_max_pool_forward,
        layers.global_max_pool_backward,
        [rng.normal(size=(3, 2, 6))],
        rng,
        n_valid=np.array([1, 4, 6]),
    )


def test_dropout_gradients(rng):
    x = rng.normal(size=(5, 4))
    _, cache = layers.dropout_forward(x, 0.5, np.random.default_rng(3), True)

    def loss() -> float:
        return float(np.sum(layers.dropout_forward(x, 0.5, np.random.default_rng(3), True)[0]))

    (g,) = layers.dropout_backward(np.ones_like(x), cache)
    assert relative_error(g, numerical_gradient(loss, x)).max() <= TOL


def test_softmax_xent_gradients(rng):
    z = rng.normal(size=(4, 3))
    labels = np.array([0, 2, 1, 2])
    _, cache = layers.softmax_xent_forward(z, labels, 4.0)
    (g,) = layers.softmax_xent_backward(np.asarray(1.0), cache)

    def loss() -> float:
        return float(layers.softmax_xent_forward(z, labels, 4.0)[0])

    assert relative_error(g, numerical_gradient(loss, z)).max() <= TOL


def test_lstm_gradients(rng):
    H, n = 3, 4
    _check_kernel(
        lstm_forward,
        lstm_backward,
        [
            rng.normal(size=(2, 5, n)),
            rng.normal(size=(4 * H, n)) * 0.5,
            rng.normal(size=(4 * H, H)) * 0.5,
            rng.normal(size=4 * H) * 0.5,
        ],
        rng,
    )


def test_embedding_gradients(rng):
    E = rng.normal(size=(6, 3))
    ids = np.array([[1, 2, 2, 5], [3, 1, 4, 4]])
    _check_kernel(layers.embedding_forward, layers.embedding_backward, [E], rng, ids=ids)


# ---- 组合模型：C=3, D=8, l_max=12 ----
C, D, L_MAX = 3, 8, 12


def _toy_batch(rng: np.random.Generator, vocab: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    lengths = [12, 9, 6, 12, 7, 10]
    seqs = [WordSequence(ids=tuple(rng.integers(1, vocab + 1, size=n)), label=i % C) for i, n in enumerate(lengths)]
    ids, lens = batch_ids(seqs, L_MAX)
    return ids, lens, np.array([s.label for s in seqs])


def _randomize_biases(params: dict[str, np.ndarray], rng: np.random.Generator) -> None:
    # 非零偏置，避免 pad 窗口恰好落在 ReLU 拐点上
    for name, p in params.items():
        if name.endswith(".b"):
            p[...] = rng.normal(scale=0.5, size=p.shape)


def _check_model(model, rng: np.random.Generator) -> None:
    vocab = model.params[EMBEDDING].shape[0] - 1
    ids, lens, labels = _toy_batch(rng, vocab)
    _randomize_biases(model.params, rng)
    # 嵌入表放大，使梯度远离数值噪声
    model.params[EMBEDDING][1:] *= 10.0

    _, analytic = loss_and_gradients(model, ids, lens, labels, training=False)

    def loss() -> float:
        return loss_and_gradients(model, ids, lens, labels, training=False)[0]

    names = [k for k in sorted(model.params) if k != EMBEDDING]
    errors = check_gradients(loss, model.params, analytic, names=names)
    assert max(errors.values()) <= TOL, errors

    # pad 行的梯度恒为零；其余行与差分一致
    num = numerical_gradient(loss, model.params[EMBEDDING])
    assert np.array_equal(analytic[EMBEDDING][0], np.zeros(D))
    assert relative_error(analytic[EMBEDDING][1:], num[1:]).max() <= TOL


@pytest.mark.parametrize("masked", [False, True])
def test_tcnn_loss_gradients(rng, masked):
    table = table_random(10, D, seed=0)
    cfg = TcnnConfig(filters=(4, 3, 2), hidden=5, dropout=(0.0, 0.0), masked_pooling=masked)
    model = build_tcnn(C, D, table, cfg, seed=0, dtype="float64")
    _check_model(model, rng)


@pytest.mark.parametrize("masked", [False, True])
def test_clstm_loss_gradients(rng, masked):
    table = table_random(10, D, seed=0)
    cfg = ClstmConfig(width=5, filters=4, hidden=(3, 3), dropout=0.0, masked_last_state=masked)
    model = build_clstm(C, D, table, cfg, seed=0, dtype="float64")
    _check_model(model, rng)
