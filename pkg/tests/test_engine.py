"""
autodiff 엔진 테스트
해석적 그래디언트 vs 중앙 차분, 테이프 격리, 옵티마이저
"""

import numpy as np
import pytest

from eventcompass.core.exceptions import NonFiniteError, ShapeError
from eventcompass.engine import AdamW, SGD, Tape, Tensor, backward, functional as F, precision
from eventcompass.engine.gradcheck import assert_gradients_close, relative_error


@pytest.mark.parametrize("case", range(5))
def test_arithmetic_gradients(case):
    """add / sub / mul / scale"""
    rng = np.random.default_rng(case)
    a, b, v = rng.normal(size=(3, 4)), rng.normal(size=(3, 4)), rng.normal(size=4)

    def build(a, b, v):
        out = F.mul(F.add(a, b), F.sub(a, v))
        return F.sum(F.scale(out, 0.7))

    assert_gradients_close(build, {'a': a, 'b': b, 'v': v})


@pytest.mark.parametrize("case", range(5))
def test_matmul_and_batched_gradients(case):
    rng = np.random.default_rng(10 + case)
    inputs = {'a': rng.normal(size=(2, 3, 4)), 'b': rng.normal(size=(2, 4, 5))}

    def build(a, b):
        return F.sum(F.mul(F.matmul(a, b), F.matmul(a, b)))

    assert_gradients_close(build, inputs)


@pytest.mark.parametrize("case", range(4))
def test_nonlinear_gradients(case):
    """exp / log / gelu / layernorm / l2_normalize"""
    rng = np.random.default_rng(20 + case)
    x = rng.normal(size=(3, 6))
    gamma, beta = rng.normal(size=6), rng.normal(size=6)
    positive = rng.uniform(0.5, 2.0, size=(3, 6))

    assert_gradients_close(lambda x: F.sum(F.gelu(x)), {'x': x})
    assert_gradients_close(lambda x: F.sum(F.mul(F.exp(F.scale(x, 0.3)), x)), {'x': x})
    assert_gradients_close(lambda p: F.sum(F.log(p)), {'p': positive})
    assert_gradients_close(
        lambda x, g, b: F.sum(F.mul(F.layernorm(x, g, b), F.layernorm(x, g, b))),
        {'x': x, 'g': gamma, 'b': beta})
    weights = rng.normal(size=(3, 6))
    assert_gradients_close(lambda x: F.sum(F.mul(F.l2_normalize(x), weights)), {'x': x})


@pytest.mark.parametrize("case", range(4))
def test_softmax_family_gradients(case):
    rng = np.random.default_rng(30 + case)
    x = rng.normal(size=(4, 7))
    weights = rng.normal(size=(4, 7))
    teacher = rng.normal(size=(4, 7))
    labels = rng.integers(0, 7, size=4)

    assert_gradients_close(lambda x: F.sum(F.mul(F.softmax(x, temperature=0.5), weights)), {'x': x})
    assert_gradients_close(lambda x: F.sum(F.mul(F.log_softmax(x, temperature=2.0), weights)), {'x': x})
    assert_gradients_close(lambda s: F.cross_entropy_distr(teacher, s, 0.04, 0.1), {'s': x})
    assert_gradients_close(lambda z: F.cross_entropy_labels(z, labels), {'z': x})


def test_shape_op_gradients():
    """reshape / transpose / concat / gather_rows / mask_rows"""
    rng = np.random.default_rng(40)
    x, y = rng.normal(size=(4, 3)), rng.normal(size=(2, 3))
    token = rng.normal(size=3)
    weights = rng.normal(size=(6, 3))
    mask = np.array([True, False, True, False])

    def build(x, y, token):
        stacked = F.concat([F.mask_rows(x, mask, token), y], axis=0)
        moved = F.transpose(F.reshape(stacked, (3, 2, 3)), (1, 0, 2))
        picked = F.gather_rows(F.reshape(moved, (6, 3)), [0, 0, 5, 2])
        return F.add(F.sum(F.mul(stacked, weights)), F.sum(F.mul(picked, picked)))

    assert_gradients_close(build, {'x': x, 'y': y, 'token': token})


def test_mean_with_axis_gradient():
    rng = np.random.default_rng(41)
    x = rng.normal(size=(3, 5))
    weights = rng.normal(size=5)
    assert_gradients_close(lambda x: F.sum(F.mul(F.mean(x, axis=0), weights)), {'x': x})
    assert_gradients_close(lambda x: F.sum(F.mean(F.mul(x, x), axis=1, keepdims=True)), {'x': x})


def test_softmax_rows_sum_to_one_and_shift_invariant():
    rng = np.random.default_rng(1)
    x = Tensor(rng.normal(size=(5, 9)) * 50, dtype=np.float64)
    probs = F.softmax(x).data
    np.testing.assert_allclose(probs.sum(axis=-1), 1.0, atol=1e-12)
    shifted = F.softmax(Tensor(x.data + 1000.0, dtype=np.float64)).data
    np.testing.assert_allclose(probs, shifted, atol=1e-12)


def test_cross_entropy_of_identical_distributions_is_entropy():
    rng = np.random.default_rng(2)
    logits = rng.normal(size=8)
    with precision(np.float64):
        value = F.cross_entropy_distr(logits, Tensor(logits), 1.0, 1.0).item()
    p = F.teacher_distribution(logits, 1.0)
    assert value == pytest.approx(float(F.entropy(p)), abs=1e-12)


def test_gradient_is_linear_in_loss():
    """∇(αL1 + βL2) = α∇L1 + β∇L2"""
    rng = np.random.default_rng(3)
    with precision(np.float64):
        w = Tensor(rng.normal(size=(4, 4)), requires_grad=True)
        x = Tensor(rng.normal(size=(3, 4)))

        def grad_of(build):
            with Tape() as tape:
                loss = build()
            return backward(loss, tape)[w]

        first = lambda: F.sum(F.gelu(F.matmul(x, w)))  # noqa: E731
        second = lambda: F.mean(F.mul(F.matmul(x, w), F.matmul(x, w)))  # noqa: E731
        combined = grad_of(lambda: F.add(F.scale(first(), 2.5), F.scale(second(), -0.5)))
        expected = 2.5 * grad_of(first) - 0.5 * grad_of(second)
    np.testing.assert_allclose(combined, expected, rtol=1e-10, atol=1e-12)


def test_untaped_ops_record_nothing():
    w = Tensor(np.ones((2, 2)), requires_grad=True)
    with Tape() as tape:
        constant = Tensor(np.ones((2, 2)))
        F.matmul(constant, constant)
        assert len(tape) == 0
        loss = F.sum(F.matmul(constant, w))
    grads = backward(loss, tape)
    assert w in grads
    assert constant not in grads


def test_op_outside_tape_cannot_backward():
    w = Tensor(np.ones(3), requires_grad=True)
    loss = F.sum(w)
    with pytest.raises(ValueError):
        backward(loss)


def test_backward_requires_scalar():
    w = Tensor(np.ones(3), requires_grad=True)
    with Tape() as tape:
        out = F.scale(w, 2.0)
    with pytest.raises(ShapeError):
        backward(out, tape)


def test_disallowed_broadcast_raises():
    with pytest.raises(ShapeError):
        F.add(Tensor(np.ones((3, 4))), Tensor(np.ones(3)))


def test_non_finite_result_raises():
    with pytest.raises(NonFiniteError):
        F.exp(Tensor(np.array([1000.0]), dtype=np.float64))
    with pytest.raises(NonFiniteError):
        F.log(Tensor(np.array([0.0, 1.0])))


def test_precision_context_restores_dtype():
    with precision(np.float64):
        assert Tensor([1.0]).dtype == np.float64
    assert Tensor([1.0]).dtype == np.float32


def test_relative_error_floor():
    zero = np.zeros(3)
    assert relative_error(zero, zero) == 0.0
    assert relative_error(np.ones(3), np.ones(3)) == 0.0


def test_adamw_skips_decay_on_vectors():
    """그래디언트 0 이면 2차원 가중치만 감쇠"""
    with precision(np.float64):
        matrix = Tensor(np.ones((2, 2)), requires_grad=True)
        bias = Tensor(np.ones(2), requires_grad=True)
        optimizer = AdamW({'w': matrix, 'b': bias}, lr=0.1, weight_decay=0.5)
        with Tape() as tape:
            loss = F.scale(F.add(F.sum(matrix), F.sum(bias)), 0.0)
        optimizer.step(backward(loss, tape))
    np.testing.assert_allclose(matrix.data, 1.0 - 0.1 * 0.5)
    np.testing.assert_allclose(bias.data, 1.0)


def test_adamw_first_step_moves_by_lr():
    """bias 보정 후 첫 스텝 크기 ≈ lr · sign(g)"""
    with precision(np.float64):
        w = Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
        optimizer = AdamW({'w': w}, lr=0.01)
        with Tape() as tape:
            loss = F.sum(F.mul(w, w))
        optimizer.step(backward(loss, tape))
    np.testing.assert_allclose(w.data, [0.99, -1.99, 2.99], atol=1e-6)
    state = optimizer.state_dict()
    assert int(state['step_count'][0]) == 1
    assert set(state) == {'exp_avg/w', 'exp_avg_sq/w', 'step_count'}


def test_adamw_state_round_trip():
    with precision(np.float64):
        w = Tensor(np.array([0.5, 1.5]), requires_grad=True)
        optimizer = AdamW({'w': w}, lr=0.01)
        with Tape() as tape:
            loss = F.sum(F.mul(w, w))
        optimizer.step(backward(loss, tape))
        clone = AdamW({'w': Tensor(w.data.copy(), requires_grad=True)}, lr=0.01)
        clone.load_state_dict(optimizer.state_dict())
    assert clone.step_count == 1
    np.testing.assert_array_equal(clone.exp_avg['w'], optimizer.exp_avg['w'])
    np.testing.assert_array_equal(clone.exp_avg_sq['w'], optimizer.exp_avg_sq['w'])


def test_sgd_step():
    with precision(np.float64):
        w = Tensor(np.array([2.0]), requires_grad=True)
        with Tape() as tape:
            loss = F.sum(F.mul(w, w))
        SGD({'w': w}, lr=0.25).step(backward(loss, tape))
    np.testing.assert_allclose(w.data, [1.0])
