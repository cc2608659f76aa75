"""Tests for tensors, primitives, reverse-mode gradients and the PRNG."""

import math

import numpy as np
import pytest

from src.errors import ContractError, DimensionError
from src.tensor import Prng, Tensor, finite_diff_check, ops
from src.tensor.gradcheck import check_parameters, relative_error


def f64(values):
    return Tensor(np.asarray(values, dtype=np.float64), dtype=np.float64)


def leaf(values):
    return Tensor(np.asarray(values, dtype=np.float64), requires_grad=True, dtype=np.float64)


# -- matmul -------------------------------------------------------------------


def test_matmul_identity():
    a = f64(np.eye(2))
    b = f64([[1, 2], [3, 4]])
    np.testing.assert_array_equal(ops.matmul(a, b).data, [[1, 2], [3, 4]])


def test_matmul_hand_arithmetic():
    assert ops.matmul(f64([[1, 2]]), f64([[3], [4]])).data.tolist() == [[11.0]]


def test_matmul_matches_triple_loop():
    """Integer-valued inputs make every partial sum exact, so the match is bit-for-bit."""
    rng = Prng(3)
    a = rng.integers(-5, 6, size=(3, 4)).astype(np.float64)
    b = rng.integers(-5, 6, size=(4, 5)).astype(np.float64)
    expected = np.zeros((3, 5))
    for i in range(3):
        for j in range(5):
            for k in range(4):
                expected[i, j] += a[i, k] * b[k, j]
    np.testing.assert_array_equal(ops.matmul(f64(a), f64(b)).data, expected)


def test_matmul_rejects_inner_mismatch():
    with pytest.raises(DimensionError):
        ops.matmul(f64(np.ones((2, 3))), f64(np.ones((2, 3))))


# -- conv2d_3x3_same ----------------------------------------------------------


def test_conv_delta_kernel_is_identity():
    rng = Prng(1)
    x = f64(rng.uniform((2, 4, 5)))
    kernel = np.zeros((2, 2, 3, 3))
    kernel[0, 0, 1, 1] = kernel[1, 1, 1, 1] = 1.0
    out = ops.conv2d_3x3_same(x, f64(kernel), f64(np.zeros(2)))
    np.testing.assert_array_equal(out.data, x.data)


def test_conv_all_ones_counts_padded_window():
    out = ops.conv2d_3x3_same(f64(np.ones((1, 3, 3))), f64(np.ones((1, 1, 3, 3))), f64([0.0]))
    np.testing.assert_array_equal(out.data[0], [[4, 6, 4], [6, 9, 6], [4, 6, 4]])


def test_conv_matches_sliding_window_oracle():
    rng = Prng(5)
    x = rng.integers(-3, 4, size=(2, 5, 5)).astype(np.float64)
    kernel = rng.integers(-2, 3, size=(2, 2, 3, 3)).astype(np.float64)
    bias = np.array([1.0, -2.0])
    padded = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    expected = np.zeros((2, 5, 5))
    for o in range(2):
        for i in range(5):
            for j in range(5):
                total = bias[o]
                for c in range(2):
                    for di in range(3):
                        for dj in range(3):
                            total += padded[c, i + di, j + dj] * kernel[o, c, di, dj]
                expected[o, i, j] = total
    out = ops.conv2d_3x3_same(f64(x), f64(kernel), f64(bias))
    np.testing.assert_array_equal(out.data, expected)


def test_conv_batched_gradients_match_finite_differences():
    """A leading batch axis, as the local branch feeds it, backpropagates into every input."""
    rng = Prng(6)
    x = f64(rng.uniform((4, 2, 3, 3), -1.0, 1.0))
    kernel = f64(rng.uniform((2, 2, 3, 3), -1.0, 1.0))
    bias = f64(rng.uniform(2, -1.0, 1.0))
    proj = rng.uniform((4, 2, 3, 3), -1.0, 1.0)
    assert finite_diff_check(lambda t: ops.sum_all(ops.mul(ops.conv2d_3x3_same(t, kernel, bias), proj)), x) < 1e-6
    assert finite_diff_check(lambda t: ops.sum_all(ops.mul(ops.conv2d_3x3_same(x, t, bias), proj)), kernel) < 1e-6
    assert finite_diff_check(lambda t: ops.sum_all(ops.mul(ops.conv2d_3x3_same(x, kernel, t), proj)), bias) < 1e-6


def test_conv_batched_kernel_gradient_sums_over_samples():
    rng = Prng(7)
    x = rng.uniform((3, 2, 4, 4), -1.0, 1.0)
    kernel, bias = leaf(rng.uniform((2, 2, 3, 3), -1.0, 1.0)), leaf(np.zeros(2))
    ops.sum_all(ops.conv2d_3x3_same(f64(x), kernel, bias)).backward()
    expected = np.zeros((2, 2, 3, 3))
    for sample in x:
        k = leaf(kernel.data)
        ops.sum_all(ops.conv2d_3x3_same(f64(sample), k, f64(np.zeros(2)))).backward()
        expected += k.grad
    np.testing.assert_allclose(kernel.grad, expected, rtol=1e-12)
    np.testing.assert_allclose(bias.grad, [3 * 16, 3 * 16])


def test_conv_rejects_channel_mismatch():
    with pytest.raises(DimensionError):
        ops.conv2d_3x3_same(f64(np.ones((3, 4, 4))), f64(np.ones((2, 2, 3, 3))), f64(np.zeros(2)))


# -- layer_norm ---------------------------------------------------------------


def test_layer_norm_of_zeros_is_zero():
    out = ops.layer_norm(f64(np.zeros((2, 4))), f64(np.ones(4)), f64(np.zeros(4)))
    np.testing.assert_array_equal(out.data, np.zeros((2, 4)))


def test_layer_norm_two_points():
    out = ops.layer_norm(f64([[1.0, 3.0]]), f64(np.ones(2)), f64(np.zeros(2)), eps=1e-12)
    np.testing.assert_allclose(out.data, [[-1.0, 1.0]], atol=1e-9)


def test_layer_norm_matches_formula():
    rng = Prng(2)
    x = rng.normal((3, 7))
    gamma, beta = rng.uniform(7, 0.5, 1.5), rng.normal(7)
    mean = x.mean(axis=1, keepdims=True)
    var = ((x - mean) ** 2).mean(axis=1, keepdims=True)
    expected = (x - mean) / np.sqrt(var + 1e-6) * gamma + beta
    out = ops.layer_norm(f64(x), f64(gamma), f64(beta))
    np.testing.assert_allclose(out.data, expected, atol=1e-6)


def test_layer_norm_rejects_empty_axis():
    with pytest.raises(DimensionError):
        ops.layer_norm(f64(np.zeros((2, 0))), f64(np.zeros(0)), f64(np.zeros(0)))


# -- softmax ------------------------------------------------------------------


def test_softmax_uniform():
    np.testing.assert_allclose(ops.softmax_lastdim(f64([0.0, 0.0, 0.0])).data, [1 / 3] * 3, atol=1e-12)


def test_softmax_large_input_is_stable():
    out = ops.softmax_lastdim(f64([1000.0, 0.0])).data
    assert np.all(np.isfinite(out))
    np.testing.assert_allclose(out, [1.0, 0.0], atol=1e-9)


def test_softmax_rows_sum_to_one_and_ignore_shifts():
    rng = Prng(4)
    x = rng.normal((5, 6), std=3.0)
    out = ops.softmax_lastdim(f64(x)).data
    expected = np.exp(x) / np.exp(x).sum(axis=1, keepdims=True)
    np.testing.assert_allclose(out, expected, atol=1e-6)
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-6)
    shifted = ops.softmax_lastdim(f64(x + 7.5)).data
    np.testing.assert_allclose(shifted, out, atol=1e-6)


# -- pointwise ----------------------------------------------------------------


def test_pointwise_values():
    assert ops.sigmoid(f64(0.0)).item() == 0.5
    assert ops.bce_map(f64([0.5]), [1.0]).data[0] == pytest.approx(math.log(2.0), abs=1e-12)
    x = f64(np.arange(6.0).reshape(2, 3))
    assert ops.mse_mean(x, x.data).item() == 0.0
    assert ops.gelu(f64(0.0)).item() == 0.0


def test_bce_map_is_per_pixel():
    out = ops.bce_map(f64(np.full((3, 3), 0.5)), np.ones((3, 3)))
    assert out.shape == (3, 3)


def test_bce_map_clamps_saturated_probabilities():
    out = ops.bce_map(f64([0.0, 1.0]), [1.0, 0.0], clamp_eps=1e-7)
    assert np.all(np.isfinite(out.data))
    np.testing.assert_allclose(out.data, -np.log(1e-7), rtol=1e-6)


def test_pointwise_shape_mismatch():
    with pytest.raises(DimensionError):
        ops.mse_mean(f64(np.ones(3)), np.ones(4))
    with pytest.raises(DimensionError):
        ops.add(f64(np.ones((2, 3))), f64(np.ones((4, 3))))


# -- backward -----------------------------------------------------------------


def test_backward_of_sum_is_ones():
    x = leaf(np.arange(6.0).reshape(2, 3))
    ops.sum_all(x).backward()
    np.testing.assert_array_equal(x.grad, np.ones((2, 3)))


def test_backward_closed_form_single_weight():
    w = leaf(1.5)
    xs = np.array([1.0, 2.0, 3.0])
    ys = np.array([2.0, 2.0, 5.0])
    ops.mse_mean(ops.mul(w, xs), ys).backward()
    expected = np.sum(2.0 * xs * (1.5 * xs - ys)) / xs.size
    assert float(w.grad) == pytest.approx(expected, rel=1e-12)


def test_backward_requires_scalar_root():
    x = leaf(np.ones(3))
    with pytest.raises(ContractError):
        ops.mul(x, 2.0).backward()


def test_gradients_accumulate_across_backward_calls():
    x = leaf([1.0, 2.0])
    ops.sum_all(ops.mul(x, x)).backward()
    first = x.grad.copy()
    ops.sum_all(ops.mul(x, x)).backward()
    np.testing.assert_array_equal(x.grad, 2.0 * first)
    x.zero_grad()
    assert x.grad is None


def test_shared_subexpression_gradient():
    x = leaf(3.0)
    y = ops.mul(x, x)
    ops.add(y, y).backward()
    assert float(x.grad) == pytest.approx(12.0)


def test_constants_do_not_track():
    a = f64([1.0, 2.0])
    out = ops.mul(a, a)
    assert not out.requires_grad
    assert out.is_leaf


# -- finite differences -------------------------------------------------------


def test_finite_diff_sum_of_squares():
    err = finite_diff_check(lambda t: ops.sum_all(ops.mul(t, t)), f64([1.0, 2.0]))
    assert err < 1e-8


def test_finite_diff_detects_planted_bug():
    """Twice the true gradient of a quadratic errs by |g| / max(1, |g|) = 1 per coordinate."""
    x = f64([1.0, 2.0])
    f = lambda t: ops.sum_all(ops.mul(t, t))  # noqa: E731
    scaled = 2.0 * np.array([2.0, 4.0])
    err = finite_diff_check(f, x, grad=scaled)
    assert err == pytest.approx(1.0, rel=1e-6)
    half_wrong = 1.5 * np.array([2.0, 4.0])
    assert finite_diff_check(f, x, grad=half_wrong) == pytest.approx(0.5, rel=1e-6)


def test_finite_diff_layer_norm():
    rng = Prng(8)
    gamma, beta = f64(rng.uniform(5, 0.5, 1.5)), f64(rng.normal(5))
    weights = rng.normal((2, 5))
    err = finite_diff_check(
        lambda t: ops.sum_all(ops.mul(ops.layer_norm(t, gamma, beta), weights)), f64(rng.normal((2, 5)))
    )
    assert err < 1e-6


@pytest.mark.parametrize("seed", range(10))
def test_primitives_pass_on_random_inputs(seed):
    rng = Prng.from_key(seed, 11)
    x = f64(rng.uniform((3, 4), -1.0, 1.0))
    b = f64(rng.uniform((4, 2), -1.0, 1.0))
    proj = rng.uniform((3, 2), -1.0, 1.0)
    composite = lambda t: ops.sum_all(  # noqa: E731
        ops.mul(ops.softmax_lastdim(ops.gelu(ops.matmul(ops.sigmoid(t), b))), proj)
    )
    assert finite_diff_check(composite, x) < 1e-6


def test_relative_error_uses_unit_floor():
    assert relative_error(np.array([0.5]), np.array([0.0])) == 0.5
    assert relative_error(np.array([4.0]), np.array([2.0])) == 1.0


def test_check_parameters_covers_every_tensor():
    w = leaf(np.array([[0.3, -0.2], [0.1, 0.4]]))
    b = leaf(np.array([0.05, -0.1]))
    x = np.array([[1.0, 2.0], [0.5, -1.0]])
    errors = check_parameters(lambda: ops.sum_all(ops.sigmoid(ops.linear(f64(x), w, b))), {"w": w, "b": b})
    assert set(errors) == {"w", "b"}
    assert max(errors.values()) < 1e-6
    assert w.grad is None and b.grad is None


# -- PRNG ---------------------------------------------------------------------


def test_prng_reproduces_first_thousand_draws():
    a = Prng(1234).uniform(1000)
    b = Prng(1234).uniform(1000)
    np.testing.assert_array_equal(a, b)


def test_prng_state_roundtrip():
    rng = Prng(9)
    rng.uniform(5)
    state = rng.get_state()
    expected = rng.permutation(20)
    other = Prng(0)
    other.set_state(state)
    np.testing.assert_array_equal(other.permutation(20), expected)


def test_prng_derived_streams_differ():
    assert not np.array_equal(Prng.from_key(0, 1).uniform(8), Prng.from_key(0, 2).uniform(8))


def test_truncated_normal_is_bounded():
    values = Prng(3).truncated_normal((1000,), std=0.02)
    assert np.abs(values).max() <= 0.04


def test_float32_is_default_dtype():
    assert Tensor([1.0, 2.0]).dtype == np.float32
