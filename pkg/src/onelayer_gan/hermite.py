"""Orthonormal Hermite machinery and the Gaussian expectation kernels built on it.

All polynomials here are the probabilists' Hermite polynomials scaled to unit
norm under the standard Gaussian, ``h_n = He_n / sqrt(n!)``, so that
``E[h_m(z) h_n(z)] = delta_mn`` for ``z ~ N(0, 1)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite import hermgauss
from numpy.polynomial.legendre import leggauss

DEFAULT_DEGREE = 21
DEFAULT_NODES = 200
MAX_DEGREE = 80

# Half-width of the truncated real line used by the piecewise rule for kinked
# activations. Gaussian mass beyond it is below 1e-40.
_PIECEWISE_HALF_WIDTH = 14.0

# Above this scale the multiplication-theorem series for one side diverges.
NONUNIT_SCALE_LIMIT = math.sqrt(2.0)


@dataclass(frozen=True)
class HermiteExpansion:
    """Truncated expansion ``phi ~ sum_i coeffs[i] * h_i``.

    ``tail_mass`` estimates ``sum_{i > N} coeffs[i]**2`` as the gap between
    the quadrature second moment and the retained coefficients.
    """

    coeffs: np.ndarray
    truncation_degree: int
    tail_mass: float
    second_moment: float = float("nan")

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float)
        if coeffs.ndim != 1 or coeffs.size != self.truncation_degree + 1:
            raise ValueError("coeffs must be a vector of length truncation_degree + 1")
        if self.tail_mass < 0:
            raise ValueError("tail_mass must be non-negative")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def sigma1(self) -> float:
        return float(self.coeffs[1])

    @property
    def squared(self) -> np.ndarray:
        """Kernel coefficients ``sigma_i**2``."""
        return self.coeffs**2

    def evaluate(self, x):
        """Evaluate the truncated series at ``x``."""
        x = np.asarray(x, dtype=float)
        return np.tensordot(self.coeffs, hermite_basis_matrix(self.truncation_degree, x), axes=1)


def hermite_basis_matrix(N: int, x) -> np.ndarray:
    """Stack ``h_0(x), ..., h_N(x)`` along a new leading axis.

    Uses the normalized three-term recurrence
    ``h_{n+1}(x) = (x h_n(x) - sqrt(n) h_{n-1}(x)) / sqrt(n + 1)``,
    which never forms the large factorials of the monomial form.
    """
    if N < 0:
        raise ValueError("degree must be non-negative")
    x = np.asarray(x, dtype=float)
    out = np.empty((N + 1,) + x.shape)
    out[0] = 1.0
    if N >= 1:
        out[1] = x
    for n in range(1, N):
        out[n + 1] = (x * out[n] - math.sqrt(n) * out[n - 1]) / math.sqrt(n + 1)
    return out


def hermite_basis_eval(n: int, x):
    """Degree-``n`` orthonormal Hermite polynomial evaluated at ``x``."""
    values = hermite_basis_matrix(n, x)[n]
    return float(values) if values.ndim == 0 else values


@lru_cache(maxsize=32)
def _gauss_hermite_rule(nodes: int):
    # Physicists' rule integrates against exp(-t^2); x = sqrt(2) t maps it onto
    # the standard Gaussian and the weights pick up a 1/sqrt(pi).
    t, w = hermgauss(nodes)
    x = math.sqrt(2.0) * t
    w = w / math.sqrt(math.pi)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=32)
def _piecewise_rule(nodes: int, kinks: tuple):
    g, gw = leggauss(nodes)
    edges = [-_PIECEWISE_HALF_WIDTH, *sorted(kinks), _PIECEWISE_HALF_WIDTH]
    xs, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        xs.append(0.5 * (b - a) * g + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * gw)
    x = np.concatenate(xs)
    w = np.concatenate(ws) * np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gaussian_rule(nodes: int = DEFAULT_NODES, kinks=()):
    """Nodes and weights with ``sum(w * f(x)) ~ E[f(z)]``, ``z ~ N(0, 1)``.

    Smooth integrands get Gauss-Hermite. When ``kinks`` is non-empty the
    line is split at those points and each piece gets Gauss-Legendre, since
    a derivative jump ruins the spectral convergence of Gauss-Hermite.
    """
    if nodes < 2:
        raise ValueError("need at least two quadrature nodes")
    kinks = tuple(float(k) for k in kinks)
    if kinks:
        return _piecewise_rule(nodes, kinks)
    return _gauss_hermite_rule(nodes)


def gaussian_expectation(f, nodes: int = DEFAULT_NODES, kinks=()) -> float:
    """Quadrature estimate of ``E[f(z)]`` for ``z ~ N(0, 1)``."""
    x, w = gaussian_rule(nodes, kinks)
    return float(w @ f(x))


def expand_activation(activation, N: int = DEFAULT_DEGREE, nodes: int = DEFAULT_NODES) -> HermiteExpansion:
    """Hermite coefficients ``sigma_i = E[phi(z) h_i(z)]`` for ``i <= N``.

    ``activation`` needs a vectorized ``value`` callable; an optional
    ``kinks`` attribute lists points where the derivative jumps.
    """
    if N < 1:
        raise ValueError("truncation degree must be at least 1")
    if N > MAX_DEGREE:
        raise ValueError(f"truncation degree {N} exceeds the stable maximum {MAX_DEGREE}")
    if nodes < 2 * N:
        raise ValueError(f"need at least 2N = {2 * N} quadrature nodes, got {nodes}")
    x, w = gaussian_rule(nodes, getattr(activation, "kinks", ()))
    fx = np.asarray(activation.value(x), dtype=float)
    coeffs = hermite_basis_matrix(N, x) @ (w * fx)
    second = float(w @ (fx * fx))
    tail = max(0.0, second - float(coeffs @ coeffs))
    return HermiteExpansion(coeffs=coeffs, truncation_degree=N, tail_mass=tail, second_moment=second)


def _power_series(c: np.ndarray, rho, order: int = 0):
    """``sum_i c_i d^order/drho^order rho^i`` via Horner, vectorized in rho."""
    rho = np.asarray(rho, dtype=float)
    n = c.size - 1
    if order:
        idx = np.arange(order, n + 1)
        fall = np.ones_like(idx, dtype=float)
        for k in range(order):
            fall *= idx - k
        c = c[order:] * fall
    acc = np.zeros_like(rho)
    for ci in c[::-1]:
        acc = acc * rho + ci
    return acc


def dual_kernel(exp: HermiteExpansion, rho, order: int = 0):
    """``sum_i sigma_i^2 rho^i``, i.e. ``E[phi(u.z) phi(v.z)]`` for unit u, v.

    ``order`` = 1 or 2 returns the first or second derivative in rho.
    """
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(np.abs(rho_arr) > 1 + 1e-12):
        raise ValueError("correlation must lie in [-1, 1]")
    out = _power_series(exp.squared, rho_arr, order)
    return float(out) if out.ndim == 0 else out


def mult_coeff(alpha: float, n: int, i: int) -> float:
    """Multiplication-theorem coefficient for unnormalized ``He``.

    ``He_n(alpha x) = sum_i eta(alpha, n, i) He_{n-2i}(x)`` with
    ``eta = alpha^(n-2i) (alpha^2-1)^i C(n,2i) (2i)!/i! 2^-i``.
    For the orthonormal ``h_n`` multiply by ``sqrt((n-2i)!/n!)``; see
    :func:`normalized_mult_coeff`.
    """
    if n < 0 or i < 0 or i > n // 2:
        raise ValueError(f"index i={i} outside 0..{n // 2}")
    return (
        alpha ** (n - 2 * i)
        * (alpha * alpha - 1.0) ** i
        * math.comb(n, 2 * i)
        * math.factorial(2 * i)
        / math.factorial(i)
        * 2.0 ** (-i)
    )


def normalized_mult_coeff(alpha: float, n: int, i: int) -> float:
    """Coefficient of ``h_{n-2i}(x)`` in ``h_n(alpha x)``."""
    return mult_coeff(alpha, n, i) * math.sqrt(math.factorial(n - 2 * i) / math.factorial(n))


def scaled_pair_expectation(alpha: float, beta: float, rho: float, m: int, n: int) -> float:
    """``E[h_m(x) h_n(y)]`` with ``x = alpha*xh``, ``y = beta*yh``, ``corr(xh, yh) = rho``.

    Expanding both sides with the multiplication theorem, only degree-matched
    pairs ``h_p(xh) h_p(yh)`` survive, each contributing ``rho^p``. Opposite
    parities therefore give exactly zero.
    """
    if alpha <= 0 or beta <= 0:
        raise ValueError("scales must be positive")
    if abs(rho) > 1 + 1e-12:
        raise ValueError("correlation must lie in [-1, 1]")
    if (m - n) % 2:
        return 0.0
    total = 0.0
    for p in range(m % 2, min(m, n) + 1, 2):
        total += (
            normalized_mult_coeff(alpha, m, (m - p) // 2)
            * normalized_mult_coeff(beta, n, (n - p) // 2)
            * rho**p
        )
    return total


@lru_cache(maxsize=256)
def _scaled_basis_matrix(alpha: float, N: int) -> np.ndarray:
    # C[m, p] = coefficient of h_p(x) in h_m(alpha x).
    C = np.zeros((N + 1, N + 1))
    for m in range(N + 1):
        for i in range(m // 2 + 1):
            C[m, m - 2 * i] = normalized_mult_coeff(alpha, m, i)
    C.setflags(write=False)
    return C


def nonunit_kernel(exp: HermiteExpansion, alpha: float, beta: float, rho):
    """``E[phi(alpha xh) phi(beta yh)]`` for unit-variance ``xh, yh`` with correlation rho.

    Evaluates the double sum ``sum_{m,n} sigma_m sigma_n E[h_m(alpha xh) h_n(beta yh)]``
    over the truncated expansion.

    The rescaled coefficients of ``phi(alpha x)`` converge only for
    ``alpha < sqrt(2)``, and the truncated ones carry a factor ``alpha^p``
    near ``p = N``, so the paired series also needs ``alpha * beta <= 1``.
    Outside that region a ``RuntimeWarning`` is issued: the result can move
    wildly with N.
    """
    if alpha <= 0 or beta <= 0:
        raise ValueError("scales must be positive")
    if max(alpha, beta) >= NONUNIT_SCALE_LIMIT or alpha * beta > 1.0 + 1e-12:
        warnings.warn(
            f"scales ({alpha:.3g}, {beta:.3g}) outside max < sqrt(2), product <= 1: "
            "truncated Hermite series is not reliable",
            RuntimeWarning,
            stacklevel=2,
        )
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(np.abs(rho_arr) > 1 + 1e-12):
        raise ValueError("correlation must lie in [-1, 1]")
    N = exp.truncation_degree
    # Coefficients of phi(alpha x) in the unscaled basis, then the unit-scale
    # dual kernel pairing of the two rescaled series.
    ca = exp.coeffs @ _scaled_basis_matrix(float(alpha), N)
    cb = exp.coeffs @ _scaled_basis_matrix(float(beta), N)
    out = _power_series(ca * cb, rho_arr)
    return float(out) if out.ndim == 0 else out


def nonunit_kernel_double_sum(exp: HermiteExpansion, alpha: float, beta: float, rho: float) -> float:
    """Literal double sum over :func:`scaled_pair_expectation`; slow reference path."""
    s = exp.coeffs
    N = exp.truncation_degree
    return sum(
        s[m] * s[n] * scaled_pair_expectation(alpha, beta, rho, m, n)
        for m in range(N + 1)
        for n in range(N + 1)
        if s[m] != 0.0 and s[n] != 0.0
    )
