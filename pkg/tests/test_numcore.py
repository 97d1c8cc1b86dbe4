"""Test tensor primitives, the tape, Adam and the LR schedule."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from pydantic import ValidationError

from src.numcore import ops
from src.numcore.gradcheck import gradcheck
from src.numcore.optim import OptimizerState, adam_step, clip_grad_norm
from src.numcore.schedule import LrSchedule, lr_at
from src.numcore.tensor import Tape, Tensor, no_grad
from src.utils.exceptions import NumericException, ShapeException, ValidationException


def randn(rng: np.random.Generator, *shape: int) -> Tensor:
    return Tensor(rng.normal(size=shape))


def weighted(out: Tensor, seed: int = 99) -> Tensor:
    """Scalar ``sum(out * W)`` with fixed random weights, so every output entry matters."""
    weights = np.random.default_rng(seed).normal(size=out.shape)
    return ops.sum(ops.mul(out, weights))


def _cases():
    rng = np.random.default_rng(0)
    a, b = randn(rng, 3, 4), randn(rng, 3, 4)
    m1, m2 = randn(rng, 2, 3, 4), randn(rng, 4, 5)
    positive = Tensor(rng.uniform(0.5, 2.0, size=(3, 4)))
    row = randn(rng, 4)
    gamma, beta = randn(rng, 4), randn(rng, 4)
    table = randn(rng, 6, 3)
    logits = randn(rng, 5, 6)
    mask = np.array([[True, True, False, True]] * 3)
    return {
        "add_broadcast": (lambda: weighted(ops.add(a, row)), [a, row]),
        "sub": (lambda: weighted(ops.sub(a, b)), [a, b]),
        "mul": (lambda: weighted(ops.mul(a, b)), [a, b]),
        "div": (lambda: weighted(ops.div(a, positive)), [a, positive]),
        "matmul_batched": (lambda: weighted(ops.matmul(m1, m2)), [m1, m2]),
        "reshape_transpose": (
            lambda: weighted(ops.transpose(ops.reshape(m1, (2, 12)), (1, 0))),
            [m1],
        ),
        "concat": (lambda: weighted(ops.concat([a, b], axis=1)), [a, b]),
        "mean_axis": (lambda: weighted(ops.mean(m1, axis=1)), [m1]),
        "softmax": (lambda: weighted(ops.softmax(a)), [a]),
        "softmax_masked": (lambda: weighted(ops.softmax(a, mask=mask)), [a]),
        "log_softmax": (lambda: weighted(ops.log_softmax(a)), [a]),
        "layer_norm": (lambda: weighted(ops.layer_norm(a, gamma, beta, 1e-12)), [a, gamma, beta]),
        "gelu": (lambda: weighted(ops.gelu(a)), [a]),
        "embedding": (lambda: weighted(ops.embedding(table, np.array([[0, 2], [2, 5]]))), [table]),
        "gather_last": (
            lambda: weighted(ops.gather_last(a, np.array([3, 0, 0, 1, 2]))),
            [a],
        ),
        "cross_entropy": (
            lambda: ops.cross_entropy(logits, [1, -1, 5, 0, 0]),
            [logits],
        ),
    }


@pytest.mark.parametrize("name", sorted(_cases()))
def test_gradcheck_primitive(name):
    """Test analytic gradients against central differences."""
    fn, tensors = _cases()[name]
    result = gradcheck(fn, tensors)
    assert result.ok(1e-4), f"{name}: {result.max_rel_error} at {result.worst}"


def test_softmax_rows_and_mask():
    """Test normalisation, masking and stability on huge logits."""
    x = Tensor([[1000.0, 1000.0, -1000.0], [0.0, 1.0, 2.0]])
    y = ops.softmax(x).numpy()
    assert np.allclose(y.sum(axis=-1), 1.0)
    assert y[0, 0] == pytest.approx(0.5)
    masked = ops.softmax(x, mask=np.array([[True, False, True], [False, False, True]])).numpy()
    assert masked[0, 1] == 0.0
    assert masked[0, 0] == pytest.approx(1.0)
    assert masked[1].tolist() == [0.0, 0.0, 1.0]


def test_log_softmax_matches_softmax():
    """Test that log_softmax is the log of softmax."""
    x = randn(np.random.default_rng(1), 4, 7)
    assert np.allclose(ops.log_softmax(x).numpy(), np.log(ops.softmax(x).numpy()))


def test_cross_entropy_uniform_is_log_vocab():
    """Test that all-zero logits give ln V."""
    loss = ops.cross_entropy(Tensor(np.zeros((3, 11))), [0, 4, 10])
    assert loss.item() == pytest.approx(math.log(11))


def test_cross_entropy_errors():
    """Test the target checks."""
    logits = Tensor(np.zeros((2, 3)))
    with pytest.raises(ValidationException, match="vocab overflow"):
        ops.cross_entropy(logits, [0, 3])
    with pytest.raises(ValidationException, match="no supervised positions"):
        ops.cross_entropy(logits, [-1, -1])
    with pytest.raises(ShapeException):
        ops.cross_entropy(logits, [0])


def test_non_finite_values_are_refused():
    """Test that NaN or Inf never enters a tensor."""
    with pytest.raises(NumericException):
        Tensor([1.0, math.inf])
    with pytest.raises(NumericException, match="div"):
        ops.div(Tensor([1.0]), Tensor([0.0]))


def test_matmul_shape_mismatch():
    """Test that incompatible extents are rejected."""
    with pytest.raises(ShapeException):
        ops.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))


def test_embedding_out_of_range():
    """Test that ids beyond the table are rejected."""
    with pytest.raises(ValidationException, match="vocab overflow"):
        ops.embedding(Tensor(np.zeros((4, 2))), np.array([4]))


def test_no_grad_records_nothing():
    """Test that no_grad suspends recording."""
    x = Tensor([1.0, 2.0], requires_grad=True)
    with Tape() as tape:
        with no_grad():
            ops.mul(x, 3.0)
        assert len(tape) == 0
        y = ops.sum(ops.mul(x, 3.0))
    assert len(tape) == 2
    tape.backward(y)
    assert x.grad.tolist() == [3.0, 3.0]


def test_reused_tensor_accumulates():
    """Test that a tensor used twice receives both contributions."""
    x = Tensor([2.0], requires_grad=True)
    with Tape() as tape:
        y = ops.sum(ops.add(ops.mul(x, x), x))
    tape.backward(y)
    assert x.grad.tolist() == [5.0]


def test_tensor_off_the_loss_path_gets_zero_gradient():
    """Test that recorded tensors unrelated to the loss end with zeros."""
    x = Tensor([1.0, 2.0], requires_grad=True)
    z = Tensor([4.0], requires_grad=True)
    with Tape() as tape:
        ops.mul(z, 2.0)
        y = ops.sum(x)
    tape.backward(y)
    assert z.grad.tolist() == [0.0]
    assert x.grad.tolist() == [1.0, 1.0]


def test_backward_needs_scalar_on_tape():
    """Test the backward preconditions."""
    x = Tensor([1.0, 2.0], requires_grad=True)
    with Tape() as tape:
        y = ops.mul(x, 2.0)
    with pytest.raises(ValidationException, match="scalar"):
        tape.backward(y)
    with pytest.raises(ValidationException, match="not recorded"):
        Tape().backward(ops.sum(y))


def test_dropout_modes():
    """Test identity outside training and inverted scaling inside."""
    x = Tensor(np.ones((200, 50)))
    assert ops.dropout(x, 0.5, None, training=False) is x
    with pytest.raises(ValidationException, match="rng"):
        ops.dropout(x, 0.5, None, training=True)
    out = ops.dropout(x, 0.5, np.random.default_rng(0), training=True).numpy()
    assert set(np.unique(out)) <= {0.0, 2.0}
    assert out.mean() == pytest.approx(1.0, abs=0.05)


def test_adam_first_step_moves_by_lr():
    """Test that the bias-corrected first step is about lr * sign(grad)."""
    params = {"w": Tensor([1.0, -1.0, 0.5])}
    state = OptimizerState.for_parameters(params)
    grads = {"w": np.array([0.3, -2.0, 0.0])}
    adam_step(params, grads, state, lr=0.1)
    assert state.t == 1
    assert state.lr == 0.1
    assert np.allclose(params["w"].numpy(), [0.9, -0.9, 0.5], atol=1e-6)


def test_adam_missing_gradient_counts_as_zero():
    """Test that parameters without gradients keep decaying moments."""
    params = {"a": Tensor([1.0]), "b": Tensor([2.0])}
    state = OptimizerState.for_parameters(params)
    adam_step(params, {"a": np.array([1.0])}, state, lr=0.01)
    assert params["b"].numpy().tolist() == [2.0]
    assert state.m["b"].tolist() == [0.0]


def test_adam_rejects_bad_gradients():
    """Test shape, finiteness and learning-rate checks."""
    params = {"w": Tensor([1.0, 2.0])}
    state = OptimizerState.for_parameters(params)
    with pytest.raises(ShapeException):
        adam_step(params, {"w": np.zeros(3)}, state, lr=0.1)
    with pytest.raises(NumericException, match="non-finite gradient"):
        adam_step(params, {"w": np.array([np.nan, 0.0])}, state, lr=0.1)
    with pytest.raises(ValidationException, match="non-negative"):
        adam_step(params, {"w": np.zeros(2)}, state, lr=-1.0)
    assert state.t == 0


def test_clip_grad_norm():
    """Test global-norm clipping and the disabled case."""
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    assert clip_grad_norm(grads, 1.0) == pytest.approx(5.0)
    assert np.sqrt(grads["a"] ** 2 + grads["b"] ** 2)[0] == pytest.approx(1.0)
    untouched = {"a": np.array([3.0]), "b": np.array([4.0])}
    clip_grad_norm(untouched, 0.0)
    assert untouched["a"].tolist() == [3.0]


def test_lr_schedule_shape():
    """Test warmup, peak, cosine midpoint and floor."""
    schedule = LrSchedule(peak_lr=1e-3, warmup_steps=10, total_steps=110, min_lr=1e-5)
    assert lr_at(schedule, 0) == 0.0
    assert lr_at(schedule, 5) == pytest.approx(5e-4)
    assert lr_at(schedule, 10) == pytest.approx(1e-3)
    assert lr_at(schedule, 60) == pytest.approx((1e-3 + 1e-5) / 2)
    assert lr_at(schedule, 110) == pytest.approx(1e-5)
    assert schedule.lr_at(500) == pytest.approx(1e-5)
    decay = [lr_at(schedule, s) for s in range(10, 111)]
    assert all(b <= a for a, b in zip(decay, decay[1:]))


def test_lr_schedule_validation():
    """Test the schedule's own constraints."""
    with pytest.raises(ValidationError):
        LrSchedule(peak_lr=1e-3, warmup_steps=20, total_steps=10)
    with pytest.raises(ValidationError):
        LrSchedule(peak_lr=1e-3, warmup_steps=0, total_steps=10)
    with pytest.raises(ValidationError):
        LrSchedule(peak_lr=1e-4, warmup_steps=1, total_steps=10, min_lr=1e-3)
    with pytest.raises(ValueError):
        lr_at(LrSchedule(peak_lr=1.0, warmup_steps=1, total_steps=2), -1)


def test_worked_examples():
    """Test small hand-computed values of the core primitives."""
    product = ops.matmul(Tensor([[1.0, 2.0], [3.0, 4.0]]), Tensor([[5.0, 6.0], [7.0, 8.0]]))
    assert product.numpy().tolist() == [[19.0, 22.0], [43.0, 50.0]]
    assert np.allclose(ops.softmax(Tensor([0.0, math.log(2.0)])).numpy(), [1 / 3, 2 / 3])
    normed = ops.layer_norm(Tensor([1.0, 3.0]), Tensor(np.ones(2)), Tensor(np.zeros(2)), 0.0)
    assert np.allclose(normed.numpy(), [-1.0, 1.0])
    shift = Tensor([0.5, -2.0])
    constant = ops.layer_norm(Tensor([4.0, 4.0]), Tensor(np.ones(2)), shift, 1e-12)
    assert np.allclose(constant.numpy(), shift.numpy())
    assert ops.gelu(Tensor([10.0])).item() == pytest.approx(10.0, abs=1e-6)


def test_gelu_slope_at_zero():
    """Test gelu(0) = 0 with derivative one half."""
    x = Tensor([0.0], requires_grad=True)
    with Tape() as tape:
        y = ops.sum(ops.gelu(x))
    tape.backward(y)
    assert y.item() == 0.0
    assert x.grad.tolist() == [pytest.approx(0.5)]


@given(
    arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(1, 8)), elements=st.floats(-30, 30))
)
def test_softmax_normalises_any_rows(values):
    """Test that every row sums to one with entries strictly inside (0, 1]."""
    out = ops.softmax(Tensor(values)).numpy()
    assert np.allclose(out.sum(axis=-1), 1.0, atol=1e-12)
    assert np.all(out > 0.0) and np.all(out <= 1.0)


@given(arrays(np.float64, 5, elements=st.floats(-10, 10)))
def test_adam_update_is_odd_in_the_gradient(grad):
    """Test that negating every gradient negates every update exactly."""
    updates = []
    for sign in (1.0, -1.0):
        params = {"w": Tensor(np.zeros(5))}
        state = OptimizerState.for_parameters(params)
        adam_step(params, {"w": sign * grad}, state, lr=0.1)
        adam_step(params, {"w": sign * grad / 2}, state, lr=0.1)
        updates.append(params["w"].numpy())
    assert np.array_equal(updates[0], -updates[1])


def test_adam_single_scalar_step():
    """Test the bias-corrected update of a fresh scalar with unit gradient."""
    params = {"w": Tensor([0.0]), "twin": Tensor([0.0])}
    state = OptimizerState.for_parameters(params)
    adam_step(params, {"w": np.array([1.0]), "twin": np.array([1.0])}, state, lr=0.1)
    assert params["w"].item() == pytest.approx(-0.1, abs=1e-8)
    assert params["w"].item() == params["twin"].item()
    still = {"w": Tensor([2.0])}
    adam_step(still, {"w": np.zeros(1)}, OptimizerState.for_parameters(still), lr=0.1)
    assert still["w"].item() == 2.0
