"""Objectives of the two-stage game and their exact derivatives.

Stage 1 pits the generator against a (rectified) linear discriminator with a
ridge penalty ``-||v||^2/2``. Stage 2 uses the quadratic discriminator
``x^T V x`` with penalty ``-||V||_F^2/2``; maximizing over V in closed form
leaves ``g(A) = 1/2 ||X - E[phi(Az) phi(Az)^T]||_F^2`` and its mini-batch
surrogate ``g_mn``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .hermite import HermiteExpansion, dual_kernel, expand_activation, nonunit_kernel
from .model import ActivationSpec, GeneratorParams, GroundTruth, relu


def _mat(A) -> np.ndarray:
    if isinstance(A, GeneratorParams):
        return A.A
    return np.atleast_2d(np.asarray(A, dtype=float))


def _check_batch(A: np.ndarray, z_batch: np.ndarray) -> None:
    if z_batch.ndim != 2 or z_batch.shape[0] != A.shape[1]:
        raise ValueError(f"latent batch must be {A.shape[1]} x m, got {z_batch.shape}")


@dataclass(frozen=True)
class EmpiricalCov:
    """Observation second moment ``X_n = (1/n) sum_i x_i x_i^T``."""

    X_n: np.ndarray
    n: int


@dataclass(frozen=True)
class BatchSecondMoment:
    """Generator batch second moment ``(1/m) sum_j phi(A z_j) phi(A z_j)^T``."""

    S_bar: np.ndarray
    m: int


def empirical_cov(samples) -> EmpiricalCov:
    """Second moment of the columns of a ``d x n`` sample matrix."""
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    if X.shape[1] < 1:
        raise ValueError("need at least one sample")
    M = (X @ X.T) / X.shape[1]
    return EmpiricalCov(0.5 * (M + M.T), X.shape[1])


# --------------------------------------------------------------------------
# Stage 1: first-moment game


def first_moment_feature(x, activation: ActivationSpec):
    """Discriminator feature ``relu(x - C)`` for odd-plus-constant activations, else ``x``."""
    x = np.asarray(x, dtype=float)
    if activation.odd_plus_constant:
        return np.maximum(x - activation.bias_constant, 0.0)
    return x


def _first_moment_feature_slope(x, activation: ActivationSpec):
    if activation.odd_plus_constant:
        return (np.asarray(x) > activation.bias_constant).astype(float)
    return np.ones_like(np.asarray(x, dtype=float))


def f1_value_grad(A, v, samples, z_batch, activation: ActivationSpec, obs_mean=None):
    """Empirical Stage-1 objective ``v^T (mu_obs - mu_gen(A)) - ||v||^2 / 2``.

    ``mu`` is the column mean of :func:`first_moment_feature`. ``obs_mean``
    may be passed to skip recomputing the observation side.

    Returns ``(value, grad_A, grad_v)``.
    """
    A = _mat(A)
    v = np.asarray(v, dtype=float)
    z_batch = np.asarray(z_batch, dtype=float)
    _check_batch(A, z_batch)
    if v.shape != (A.shape[0],):
        raise ValueError("v must have one entry per output coordinate")
    if obs_mean is None:
        samples = np.atleast_2d(np.asarray(samples, dtype=float))
        if samples.shape[0] != A.shape[0]:
            raise ValueError("samples must be d x n")
        obs_mean = first_moment_feature(samples, activation).mean(axis=1)
    U = A @ z_batch
    Y = activation.value(U)
    gen_mean = first_moment_feature(Y, activation).mean(axis=1)
    gap = obs_mean - gen_mean
    value = float(v @ gap - 0.5 * v @ v)
    grad_v = gap - v
    slope = _first_moment_feature_slope(Y, activation) * activation.d1(U)
    grad_A = -(v[:, None] * slope) @ z_batch.T / z_batch.shape[1]
    return value, grad_A, grad_v


# --------------------------------------------------------------------------
# Stage 2: quadratic-discriminator game


def batch_second_moment(A, z_batch, activation: ActivationSpec) -> BatchSecondMoment:
    A = _mat(A)
    z_batch = np.asarray(z_batch, dtype=float)
    _check_batch(A, z_batch)
    _, _, S = kernels.forward_stats(A, z_batch, activation.code, activation.leak)
    return BatchSecondMoment(S, z_batch.shape[1])


def g_tilde_mn(A, cov: EmpiricalCov, z_batch, activation: ActivationSpec) -> float:
    """Mini-batch risk ``1/2 ||X_n - S_bar(A)||_F^2``."""
    S = batch_second_moment(A, z_batch, activation).S_bar
    return 0.5 * float(np.sum((cov.X_n - S) ** 2))


def game_value(V, S_bar, cov: EmpiricalCov) -> float:
    """``<S_bar - X_n, V> - ||V||_F^2 / 2`` for a symmetric V."""
    S = S_bar.S_bar if isinstance(S_bar, BatchSecondMoment) else S_bar
    V = np.asarray(V, dtype=float)
    return float(np.sum((S - cov.X_n) * V) - 0.5 * np.sum(V * V))


def ascent_step(V, S_bar, cov: EmpiricalCov, step: float = 1.0) -> np.ndarray:
    """One gradient-ascent step on V; with ``step = 1`` it lands on the maximizer."""
    S = S_bar.S_bar if isinstance(S_bar, BatchSecondMoment) else S_bar
    V = np.asarray(V, dtype=float)
    return V + step * ((S - cov.X_n) - V)


def optimal_V(S_bar, cov: EmpiricalCov) -> np.ndarray:
    """Exact maximizer ``S_bar - X_n`` of the regularized game in V."""
    S = S_bar.S_bar if isinstance(S_bar, BatchSecondMoment) else S_bar
    return S - cov.X_n


def grad_A_empirical(A, cov: EmpiricalCov, z_batch, activation: ActivationSpec, V=None) -> np.ndarray:
    """``(2/m) sum_j diag(phi'(A z_j)) V phi(A z_j) z_j^T``.

    With the default ``V = S_bar - X_n`` this is the gradient of
    :func:`g_tilde_mn` (Danskin).
    """
    A = _mat(A)
    z_batch = np.asarray(z_batch, dtype=float)
    _check_batch(A, z_batch)
    Y, D1, S = kernels.forward_stats(A, z_batch, activation.code, activation.leak)
    R = S - cov.X_n if V is None else np.asarray(V, dtype=float)
    return kernels.grad_from_residual(Y, D1, z_batch, R)


def hvp_empirical(A, B, cov: EmpiricalCov, z_batch, activation: ActivationSpec) -> np.ndarray:
    """Directional derivative of :func:`grad_A_empirical` along ``B``.

    Three pieces: the ``phi''`` term and the ``phi'`` term from
    differentiating each sample, plus the change of the residual
    ``S_bar - X_n`` itself, which the batch estimator carries because the
    residual depends on A.
    """
    A = _mat(A)
    B = np.asarray(B, dtype=float)
    if B.shape != A.shape:
        raise ValueError("direction must have the shape of A")
    Zb = np.asarray(z_batch, dtype=float)
    _check_batch(A, Zb)
    m = Zb.shape[1]
    U = A @ Zb
    W = B @ Zb
    Y = activation.value(U)
    D1 = activation.d1(U)
    D2 = activation.d2(U)
    S = (Y @ Y.T) / m
    R = S - cov.X_n
    dY = D1 * W
    dS = (dY @ Y.T + Y @ dY.T) / m
    inner = (D2 * W) * (R @ Y) + D1 * (R @ dY) + D1 * (dS @ Y)
    return (2.0 / m) * inner @ Zb.T


# --------------------------------------------------------------------------
# Population risk via Hermite kernels


def population_second_moment(A, exp: HermiteExpansion, unit_tol: float = 1e-9) -> np.ndarray:
    """``E[phi(Az) phi(Az)^T]`` in closed form.

    Unit rows use the dual kernel on ``A A^T``; otherwise each entry uses
    :func:`nonunit_kernel` with the two row norms and their cosine.
    """
    A = _mat(A)
    norms = np.linalg.norm(A, axis=1)
    G = A @ A.T
    if np.all(np.abs(norms - 1.0) <= unit_tol):
        return dual_kernel(exp, np.clip(G, -1.0, 1.0))
    if np.any(norms == 0):
        raise ValueError("zero rows are not supported by the non-unit kernel")
    d = A.shape[0]
    M = np.empty((d, d))
    cos = np.clip(G / np.outer(norms, norms), -1.0, 1.0)
    for j in range(d):
        for k in range(j, d):
            M[j, k] = M[k, j] = nonunit_kernel(exp, norms[j], norms[k], cos[j, k])
    return M


def population_risk(A, truth: GroundTruth, exp: HermiteExpansion) -> float:
    """``g(A) = 1/2 ||E[x x^T] - E[phi(Az) phi(Az)^T]||_F^2`` from the expansion."""
    diff = population_second_moment(truth.A_star, exp) - population_second_moment(A, exp)
    return 0.5 * float(np.sum(diff * diff))


# --------------------------------------------------------------------------
# Per-entry scalar losses of the reparametrized risk in Z = A A^T


def scalar_loss(exp: HermiteExpansion, z_star, z):
    """``1/2 (K(z) - K(z_star))^2`` with ``K`` the dual kernel."""
    r = np.asarray(dual_kernel(exp, z)) - np.asarray(dual_kernel(exp, z_star))
    return 0.5 * r * r


def kernel_function(exp: HermiteExpansion, activation: ActivationSpec | None = None):
    """``K(rho, order)`` for the per-entry losses.

    Generic expansions give the truncated dual kernel. Leaky ReLU uses the
    split ``(1-a)^2 h(z) + a z`` with ``h`` the ReLU kernel taken from its
    own expansion, so that the linear part is exact.
    """
    if activation is not None and activation.kind == "leaky_relu":
        relu_exp = expand_activation(relu(), exp.truncation_degree)
        c, a = (1.0 - activation.leak) ** 2, activation.leak

        def K(z, order=0):
            lin = {0: a * np.asarray(z, dtype=float), 1: a, 2: 0.0}[order]
            return c * dual_kernel(relu_exp, z, order) + lin

        return K
    return lambda z, order=0: dual_kernel(exp, z, order)


def scalar_loss_derivative(exp: HermiteExpansion, z_star, z, activation: ActivationSpec | None = None):
    """Derivative in ``z`` of :func:`scalar_loss`: ``(K(z) - K(z*)) K'(z)``.

    Passing a leaky-ReLU ``activation`` switches to the split kernel of
    :func:`kernel_function`.
    """
    K = kernel_function(exp, activation)
    return (K(z) - K(z_star)) * K(z, 1)


def scalar_loss_second_derivative(exp: HermiteExpansion, z_star, z, activation: ActivationSpec | None = None):
    """``K'(z)^2 + (K(z) - K(z*)) K''(z)``."""
    K = kernel_function(exp, activation)
    k1 = K(z, 1)
    return k1 * k1 + (K(z) - K(z_star)) * K(z, 2)


def risk_grad_Z(Z, Z_star, exp: HermiteExpansion) -> np.ndarray:
    """Entrywise gradient of ``g~(Z) = sum_jk scalar_loss(z*_jk, z_jk)``."""
    Z = np.clip(np.asarray(Z, dtype=float), -1.0, 1.0)
    return scalar_loss_derivative(exp, np.asarray(Z_star, dtype=float), Z)


def risk_hess_Z(Z, Z_star, exp: HermiteExpansion) -> np.ndarray:
    """Entrywise second derivative of ``g~`` (the Hessian is diagonal in Z)."""
    Z = np.clip(np.asarray(Z, dtype=float), -1.0, 1.0)
    return scalar_loss_second_derivative(exp, np.asarray(Z_star, dtype=float), Z)
