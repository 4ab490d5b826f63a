from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from action_words.errors import EmptyMask, GraphCycle, InvalidRate, WindowTooLarge
from nn import layers
from nn.graph import Node, apply, backward, leaf, topological_order
from nn.lstm import lstm_cell_forward
from nn.optim import RmsProp


# ---- conv1d ----
def _conv_oracle(x: np.ndarray, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    F, d, D = W.shape
    T_out = x.shape[1] - d + 1
    out = np.zeros((F, T_out))
    for f in range(F):
        for t in range(T_out):
            out[f, t] = b[f] + sum(W[f, tau, c] * x[c, t + tau] for tau in range(d) for c in range(D))
    return out


def test_conv1d_matches_loops(rng):
    x = rng.normal(size=(2, 4, 9))
    W = rng.normal(size=(3, 3, 4))
    b = rng.normal(size=3)
    out, _ = layers.conv1d_forward(x, W, b)
    assert out.shape == (2, 3, 7)
    for n in range(2):
        assert np.allclose(out[n], _conv_oracle(x[n], W, b))


def test_conv1d_width_one_ones_gives_column_sums(rng):
    x = rng.normal(size=(1, 5, 6))
    out, _ = layers.conv1d_forward(x, np.ones((1, 1, 5)), np.zeros(1))
    assert np.allclose(out[0, 0], x[0].sum(axis=0))


def test_conv1d_zero_input_gives_bias(rng):
    b = rng.normal(size=4)
    out, _ = layers.conv1d_forward(np.zeros((1, 3, 6)), rng.normal(size=(4, 2, 3)), b)
    assert np.allclose(out[0], b[:, None])


def test_conv1d_linear_without_bias(rng):
    W = rng.normal(size=(3, 2, 4))
    zero = np.zeros(3)
    x1, x2 = rng.normal(size=(1, 4, 8)), rng.normal(size=(1, 4, 8))
    a, c = 1.7, -0.4
    lhs, _ = layers.conv1d_forward(a * x1 + c * x2, W, zero)
    rhs = a * layers.conv1d_forward(x1, W, zero)[0] + c * layers.conv1d_forward(x2, W, zero)[0]
    assert np.allclose(lhs, rhs)


def test_conv1d_window_too_large():
    with pytest.raises(WindowTooLarge):
        layers.conv1d_forward(np.zeros((1, 2, 2)), np.zeros((1, 3, 2)), np.zeros(1))


# ---- relu / pooling ----
def test_relu_examples():
    assert layers.relu(np.array(-1.0)) == 0.0
    assert layers.relu(np.array(2.0)) == 2.0


@given(arrays(np.float64, st.integers(1, 30), elements=st.floats(-1e6, 1e6)))
def test_relu_idempotent(x):
    assert np.array_equal(layers.relu(layers.relu(x)), layers.relu(x))


def test_global_max_pool_examples(rng):
    out, idx = layers.global_max_pool(np.array([[-3.0, -1.0, -2.0]]))
    assert out[0] == -1.0 and idx[0] == 1
    single = rng.normal(size=(4, 1))
    assert np.array_equal(layers.global_max_pool(single)[0], single[:, 0])
    act = rng.normal(size=(5, 11))
    out, idx = layers.global_max_pool(act)
    for f in range(5):
        best = max(range(11), key=lambda t: (act[f, t], -t))
        assert idx[f] == best and out[f] == act[f, best]


def test_global_max_pool_mask():
    act = np.array([[1.0, 5.0, 9.0]])
    out, idx = layers.global_max_pool(act, 2)
    assert out[0] == 5.0 and idx[0] == 1
    with pytest.raises(EmptyMask):
        layers.global_max_pool(act, 0)


def test_max_pool_gradient_routes_to_argmax():
    act = np.array([[[0.5, 3.0, 1.0]]])
    _, cache = layers.global_max_pool_forward(act)
    (g,) = layers.global_max_pool_backward(np.array([[2.0]]), cache)
    assert np.array_equal(g, [[[0.0, 2.0, 0.0]]])


def test_relu_gradient_at_negative_input():
    _, cache = layers.relu_forward(np.array([-1.0, 2.0]))
    (g,) = layers.relu_backward(np.ones(2), cache)
    assert np.array_equal(g, [0.0, 1.0])


# ---- dense / dropout ----
def test_dense_examples(rng):
    x = rng.normal(size=(2, 3))
    b = rng.normal(size=3)
    assert np.allclose(layers.dense_forward(x, np.eye(3), b)[0], x + b)
    assert np.allclose(layers.dense_forward(np.zeros((1, 3)), rng.normal(size=(4, 3)), b[:1])[0], b[0])
    W = rng.normal(size=(4, 3))
    expected = [[sum(W[o, i] * x[n, i] for i in range(3)) + 1.0 for o in range(4)] for n in range(2)]
    assert np.allclose(layers.dense_forward(x, W, np.ones(4))[0], expected)


def test_dropout_identity_cases(rng):
    x = rng.normal(size=(10, 10))
    assert np.array_equal(layers.dropout(x, 0.0, rng), x)
    assert np.array_equal(layers.dropout(x, 0.7, rng, training=False), x)


def test_dropout_zero_fraction_and_scaling():
    x = np.ones(100_000)
    y = layers.dropout(x, 0.3, np.random.default_rng(4))
    frac = float(np.mean(y == 0))
    assert abs(frac - 0.3) <= 0.01
    assert np.allclose(y[y != 0], 1.0 / 0.7)


def test_dropout_invalid_rate(rng):
    with pytest.raises(InvalidRate):
        layers.dropout(np.ones(3), 1.0, rng)


# ---- softmax / cross-entropy ----
def test_softmax_examples(rng):
    assert np.allclose(layers.softmax(np.zeros(2)), [0.5, 0.5])
    z = rng.normal(size=6)
    e = [np.exp(v) for v in z]
    assert np.allclose(layers.softmax(z), [v / sum(e) for v in e])


@given(arrays(np.float64, st.integers(1, 10), elements=st.floats(-50, 50)), st.floats(-100, 100))
def test_softmax_shift_invariant(z, shift):
    p = layers.softmax(z)
    assert np.all(p >= 0)
    assert abs(p.sum() - 1.0) <= 1e-9
    assert np.allclose(layers.softmax(z + shift), p, atol=1e-12)


def test_cross_entropy_examples():
    assert layers.cross_entropy(np.array([0.0, 1.0, 0.0]), 1) == 0.0
    assert layers.cross_entropy(np.full(5, 0.2), 3) == pytest.approx(np.log(5))
    assert layers.cross_entropy(np.array([1.0, 0.0]), 1) == pytest.approx(-np.log(1e-12))
    p = np.array([[0.2, 0.8], [0.6, 0.4]])
    assert np.allclose(layers.cross_entropy(p, np.array([1, 1])), [-np.log(0.8), -np.log(0.4)])


# ---- LSTM cell ----
def test_lstm_zero_weights_give_zero_state():
    H, n = 3, 2
    h, c, _ = lstm_cell_forward(
        np.ones(n), np.zeros(H), np.zeros(H), np.zeros((4 * H, n)), np.zeros((4 * H, H)), np.zeros(4 * H)
    )
    assert np.array_equal(h, np.zeros(H))


def test_lstm_saturated_forget_gate_keeps_cell(rng):
    H, n = 4, 3
    b = np.zeros(4 * H)
    b[H : 2 * H] = 20.0  # forget gate
    b[:H] = -20.0  # input gate
    c_prev = rng.normal(size=H)
    _, c, _ = lstm_cell_forward(
        rng.normal(size=n), rng.normal(size=H), c_prev, np.zeros((4 * H, n)), np.zeros((4 * H, H)), b
    )
    assert np.allclose(c, c_prev, atol=1e-8)


def test_lstm_cell_matches_scalar_loop(rng):
    H, n = 3, 2
    x, h0, c0 = rng.normal(size=n), rng.normal(size=H), rng.normal(size=H)
    W, U, b = rng.normal(size=(4 * H, n)), rng.normal(size=(4 * H, H)), rng.normal(size=4 * H)
    h, c, _ = lstm_cell_forward(x, h0, c0, W, U, b)

    def sig(v: float) -> float:
        return 1.0 / (1.0 + np.exp(-v))

    for j in range(H):
        z = [b[g * H + j] + sum(W[g * H + j, k] * x[k] for k in range(n)) + sum(U[g * H + j, k] * h0[k] for k in range(H)) for g in range(4)]
        cj = sig(z[1]) * c0[j] + sig(z[0]) * np.tanh(z[3])
        assert c[j] == pytest.approx(cj)
        assert h[j] == pytest.approx(sig(z[2]) * np.tanh(cj))
        assert abs(c[j]) <= abs(c0[j]) + 1.0


# ---- graph ----
def test_graph_cycle_detected():
    a = leaf("a", np.ones(2))
    b = Node(value=np.ones(2), parents=(a,), backward_fn=lambda g: (g,), name="b")
    a.parents = (b,)
    with pytest.raises(GraphCycle):
        topological_order(b)


def test_backward_accumulates_shared_parent():
    x = leaf("x", np.array([[2.0, -1.0]]))
    y = apply(layers.concat_forward, layers.concat_backward, x, x)
    grads = backward(y, upstream=np.array([[1.0, 2.0, 3.0, 4.0]]))
    assert np.array_equal(grads["x"], [[4.0, 6.0]])


# ---- RMSProp ----
def test_rmsprop_zero_gradient_is_noop():
    p = {"w": np.array([1.0, -2.0])}
    RmsProp(lr=0.1).step(p, {"w": np.zeros(2)})
    assert np.array_equal(p["w"], [1.0, -2.0])


def test_rmsprop_first_step_closed_form():
    p = {"w": np.array([0.0])}
    RmsProp(lr=0.1, rho=0.9, eps=1e-8).step(p, {"w": np.array([1.0])})
    assert p["w"][0] == pytest.approx(-0.1 / np.sqrt(0.1), rel=1e-6)
    assert p["w"][0] == pytest.approx(-0.3162, abs=1e-4)


def test_rmsprop_constant_gradient_step_tends_to_lr():
    opt = RmsProp(lr=0.01, rho=0.9)
    p = {"w": np.array([0.0])}
    prev = 0.0
    for _ in range(500):
        prev = float(p["w"][0])
        opt.step(p, {"w": np.array([3.0])})
    step = prev - float(p["w"][0])
    assert step == pytest.approx(0.01, rel=0.01)
    assert np.all(opt.acc["w"] >= 0)
