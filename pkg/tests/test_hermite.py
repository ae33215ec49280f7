import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.hermite_e import hermeval

from onelayer_gan.hermite import (
    MAX_DEGREE,
    dual_kernel,
    expand_activation,
    gaussian_expectation,
    gaussian_rule,
    hermite_basis_eval,
    hermite_basis_matrix,
    mult_coeff,
    nonunit_kernel,
    nonunit_kernel_double_sum,
    normalized_mult_coeff,
    scaled_pair_expectation,
)
from onelayer_gan.model import get_activation, identity, leaky_relu, relu, sigmoid, tanh

from conftest import mc_pair

BUILTINS = [identity(), tanh(), sigmoid(), relu(), leaky_relu(0.2)]


def test_basis_examples():
    assert hermite_basis_eval(0, 3.7) == 1.0
    assert hermite_basis_eval(1, 2.0) == 2.0
    assert hermite_basis_eval(2, 0.0) == pytest.approx(-1 / math.sqrt(2), abs=1e-15)


@given(st.integers(0, 30), st.floats(-6, 6))
def test_basis_matches_monomial_form(n, x):
    # independent route: numpy's probabilists' Hermite series divided by sqrt(n!)
    c = np.zeros(n + 1)
    c[n] = 1.0
    ref = hermeval(x, c) / math.sqrt(math.factorial(n))
    assert hermite_basis_eval(n, x) == pytest.approx(ref, rel=1e-9, abs=1e-9)


def test_orthonormality():
    x, w = gaussian_rule()
    H = hermite_basis_matrix(21, x)
    assert np.allclose((H * w) @ H.T, np.eye(22), atol=1e-8)


def test_rule_integrates_gaussian_moments():
    assert gaussian_expectation(lambda x: x**2) == pytest.approx(1.0, abs=1e-12)
    assert gaussian_expectation(lambda x: x**4, kinks=(0.0,)) == pytest.approx(3.0, abs=1e-10)


def test_identity_expansion():
    e = expand_activation(identity(), 5)
    assert np.allclose(e.coeffs, [0, 1, 0, 0, 0, 0], atol=1e-12)


def test_tanh_even_coefficients_vanish():
    e = expand_activation(tanh(), 10)
    assert np.all(np.abs(e.coeffs[0::2]) < 1e-10)


def test_sigmoid_even_coefficients_above_zero_vanish():
    e = expand_activation(sigmoid())
    assert e.coeffs[0] == pytest.approx(0.5, abs=1e-12)
    assert np.all(np.abs(e.coeffs[2::2]) < 1e-10)


def test_leaky_sigma1():
    e = expand_activation(leaky_relu(0.2), 10)
    assert e.sigma1 == pytest.approx(0.6, abs=1e-10)


def test_leaky_sigma1_monte_carlo():
    rng = np.random.default_rng(49)
    x = rng.standard_normal(1_000_000)
    v = x * leaky_relu(0.2).value(x)
    assert abs(v.mean() - 0.6) <= 3 * v.std() / 1e3


@pytest.mark.parametrize("act", BUILTINS, ids=lambda a: a.kind)
def test_parseval(act):
    e = expand_activation(act)
    x, w = gaussian_rule(kinks=act.kinks)
    second = float(w @ act.value(x) ** 2)
    assert e.tail_mass >= 0
    assert np.sum(e.squared) <= second + 1e-12
    assert abs(np.sum(e.squared) + e.tail_mass - second) <= 1e-6


def test_degree_limit():
    with pytest.raises(ValueError):
        expand_activation(tanh(), MAX_DEGREE + 1)
    with pytest.raises(ValueError):
        expand_activation(tanh(), 21, nodes=30)


def test_dual_kernel_endpoints(tanh_exp):
    assert dual_kernel(tanh_exp, 0.0) == pytest.approx(tanh_exp.coeffs[0] ** 2)
    assert dual_kernel(tanh_exp, 1.0) == pytest.approx(np.sum(tanh_exp.squared))
    assert dual_kernel(tanh_exp, 1.0) == pytest.approx(tanh_exp.second_moment, abs=1e-5)
    s = tanh_exp.squared
    assert dual_kernel(tanh_exp, -1.0) == pytest.approx(s[0] - s[1::2].sum() + s[2::2].sum(), abs=1e-15)


def test_dual_kernel_minus_one_monte_carlo():
    act = sigmoid()
    e = expand_activation(act)
    s = e.squared
    closed = s[0] - s[1::2].sum()
    mean, se = mc_pair(act.value, 1.0, 1.0, -1.0, seed=3)
    assert dual_kernel(e, -1.0) == pytest.approx(closed, abs=1e-10)
    assert abs(closed - mean) <= 3 * se


def test_dual_kernel_tanh_monte_carlo(tanh_exp):
    mean, se = mc_pair(np.tanh, 1.0, 1.0, 0.5, seed=5)
    assert abs(dual_kernel(tanh_exp, 0.5) - mean) <= 3 * se


def test_dual_kernel_rejects_bad_rho(tanh_exp):
    with pytest.raises(ValueError):
        dual_kernel(tanh_exp, 1.01)


def test_dual_kernel_derivatives(tanh_exp):
    h = 1e-6
    for r in (-0.7, 0.1, 0.6):
        fd1 = (dual_kernel(tanh_exp, r + h) - dual_kernel(tanh_exp, r - h)) / (2 * h)
        fd2 = (dual_kernel(tanh_exp, r + h, 1) - dual_kernel(tanh_exp, r - h, 1)) / (2 * h)
        assert dual_kernel(tanh_exp, r, 1) == pytest.approx(fd1, rel=1e-7)
        assert dual_kernel(tanh_exp, r, 2) == pytest.approx(fd2, rel=1e-6)


def test_mult_coeff_examples():
    assert mult_coeff(1.0, 4, 1) == 0.0
    assert mult_coeff(1.0, 5, 2) == 0.0
    assert mult_coeff(2.0, 1, 0) == 2.0
    assert mult_coeff(2.0, 2, 1) == 3.0
    with pytest.raises(ValueError):
        mult_coeff(2.0, 2, 2)


def test_mult_coeff_quadrature_bridge():
    # He_2(2x) = 4x^2 - 1 = 4 He_2(x) + 3 He_0(x). With h_n = He_n / sqrt(n!)
    # the h_0 coefficient of h_2(2x) is E[h_2(2x) h_0(x)] = 3 / sqrt(2!),
    # i.e. mult_coeff times sqrt((n - 2i)! / n!).
    q = gaussian_expectation(lambda x: hermite_basis_eval(2, 2 * x))
    assert q == pytest.approx(3 / math.sqrt(2), abs=1e-12)
    assert normalized_mult_coeff(2.0, 2, 1) == pytest.approx(q, abs=1e-12)


@given(st.floats(0.3, 2.0), st.integers(0, 12), st.floats(-3, 3))
@settings(max_examples=60)
def test_multiplication_theorem(alpha, n, x):
    lhs = hermite_basis_eval(n, alpha * x)
    rhs = sum(normalized_mult_coeff(alpha, n, i) * hermite_basis_eval(n - 2 * i, x) for i in range(n // 2 + 1))
    assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-8)


def test_scaled_pair_examples():
    assert scaled_pair_expectation(1.3, 0.4, 0.2, 1, 2) == 0.0
    assert scaled_pair_expectation(1.0, 1.0, 0.35, 1, 1) == pytest.approx(0.35)
    rng = np.random.default_rng(11)
    x = rng.standard_normal(1_000_000)
    y = 0.3 * x + math.sqrt(1 - 0.09) * rng.standard_normal(1_000_000)
    p = hermite_basis_eval(3, 1.5 * x) * hermite_basis_eval(3, 0.8 * y)
    assert abs(scaled_pair_expectation(1.5, 0.8, 0.3, 3, 3) - p.mean()) <= 3 * p.std(ddof=1) / 1e3


def test_scaled_pair_quadrature():
    # 2D tensor Gauss-Hermite is exact for these polynomial integrands
    x, w = gaussian_rule(40)
    X, Y = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w)
    a, b, r = 1.2, 0.7, -0.45
    xs, ys = X, r * X + math.sqrt(1 - r * r) * Y
    for m, n in [(2, 4), (3, 5), (4, 4), (5, 3), (6, 2)]:
        q = np.sum(W * hermite_basis_eval(m, a * xs) * hermite_basis_eval(n, b * ys))
        assert scaled_pair_expectation(a, b, r, m, n) == pytest.approx(q, abs=1e-10)


def test_nonunit_unit_scale_equals_dual(tanh_exp):
    rhos = np.linspace(-1, 1, 21)
    assert np.allclose(nonunit_kernel(tanh_exp, 1.0, 1.0, rhos), dual_kernel(tanh_exp, rhos), atol=1e-10, rtol=0)


def test_nonunit_identity_is_bilinear():
    e = expand_activation(identity(), 7)
    for a, b, r in [(0.5, 1.2, 0.3), (1.3, 0.7, -0.8), (0.9, 0.9, 1.0)]:
        assert nonunit_kernel(e, a, b, r) == pytest.approx(a * b * r, abs=1e-12)


def test_nonunit_tanh_monte_carlo(tanh_exp):
    mean, se = mc_pair(np.tanh, 1.3, 0.7, 0.4, seed=13)
    assert abs(nonunit_kernel(tanh_exp, 1.3, 0.7, 0.4) - mean) <= 3 * se


def test_nonunit_double_sum_reference(tanh_exp):
    for a, b, r in [(1.3, 0.7, 0.4), (0.6, 0.9, -0.5), (0.8, 1.2, 0.9)]:
        assert nonunit_kernel(tanh_exp, a, b, r) == pytest.approx(nonunit_kernel_double_sum(tanh_exp, a, b, r), abs=1e-12)


def test_nonunit_warns_outside_valid_region(tanh_exp):
    with pytest.warns(RuntimeWarning):
        nonunit_kernel(tanh_exp, 1.2, 1.2, 0.3)
    with pytest.warns(RuntimeWarning):
        nonunit_kernel(tanh_exp, 1.5, 0.5, 0.3)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        nonunit_kernel(tanh_exp, 1.3, 0.7, 0.3)


@given(st.floats(0.2, 1.0), st.floats(0.2, 1.0), st.floats(-1, 1))
@settings(max_examples=50)
def test_nonunit_symmetric_and_bounded(a, b, r):
    e = expand_activation(sigmoid())
    k = nonunit_kernel(e, a, b, r)
    assert k == pytest.approx(nonunit_kernel(e, b, a, r), abs=1e-12)
    # Cauchy-Schwarz against the quadrature second moments
    ea = gaussian_expectation(lambda x: sigmoid().value(a * x) ** 2)
    eb = gaussian_expectation(lambda x: sigmoid().value(b * x) ** 2)
    assert abs(k) <= math.sqrt(ea * eb) + 1e-6


@given(st.floats(-1, 1))
def test_dual_kernel_bounded_by_second_moment(r):
    e = expand_activation(tanh())
    assert abs(dual_kernel(e, r)) <= dual_kernel(e, 1.0) + 1e-15


@pytest.mark.parametrize("kind", ["tanh", "sigmoid", "identity"])
def test_rectified_mean_increasing_in_scale(kind):
    act = get_activation(kind)
    C = act.bias_constant
    alphas = np.linspace(0.1, 3.0, 60)
    vals = [gaussian_expectation(lambda x: np.maximum(act.value(a * x) - C, 0.0), kinks=(0.0,)) for a in alphas]
    assert np.all(np.diff(vals) > 0)


def test_expansion_is_immutable(tanh_exp):
    with pytest.raises(ValueError):
        tanh_exp.coeffs[0] = 1.0
