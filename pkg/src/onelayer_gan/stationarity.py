"""Approximate stationarity certificates for the diagonal-constrained risk.

Everything is phrased through the reparametrized population risk
``g~(Z) = sum_jk l(z*_jk, z_jk)`` with ``l = (K(z) - K(z*))^2 / 2`` and ``K``
the dual kernel, under the constraints ``Z_ii = y_i`` (unit here). With
``G = dg~/dZ`` and ``H`` its entrywise second derivative, the Lagrangian
``L(A, lam) = g~(AA^T) - sum_i lam_i (||a_i||^2 - y_i)`` has

    grad_A L = 2 (G - diag lam) A
    D grad_A L [B] = 2 (G - diag lam) B + 2 (H o (B A^T + A B^T)) A
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .hermite import HermiteExpansion
from .losses import scalar_loss_derivative, scalar_loss_second_derivative
from .model import ActivationSpec, GroundTruth

DEFAULT_PROBES = 64
RANK_RTOL = 1e-10


@dataclass
class StationarityCertificate:
    lam: np.ndarray
    S: np.ndarray
    eps_feas: float
    eps_grad: float
    eps_curv: float

    @property
    def max_eps(self) -> float:
        """Smallest eps for which every residual passes (curvature counted when negative)."""
        return max(self.eps_feas, self.eps_grad, max(0.0, -self.eps_curv))


class FospCertificate(NamedTuple):
    sigma: np.ndarray
    S: np.ndarray
    eps: float


class RecoveryCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def _unit_truth(truth: GroundTruth) -> None:
    if not np.allclose(np.diag(truth.Z_star), 1.0, atol=1e-9):
        raise ValueError("certificates use the unit-row dual kernel; ground truth rows must have unit norm")


def risk_derivatives(Z, truth: GroundTruth, exp: HermiteExpansion, activation: Optional[ActivationSpec] = None):
    """Entrywise ``(G, H)`` of ``g~`` at ``Z`` (entries clipped to ``[-1, 1]``)."""
    Z = np.clip(np.asarray(Z, dtype=float), -1.0, 1.0)
    Zs = truth.Z_star
    G = scalar_loss_derivative(exp, Zs, Z, activation)
    H = scalar_loss_second_derivative(exp, Zs, Z, activation)
    return 0.5 * (G + G.T), 0.5 * (H + H.T)


def fit_multipliers(A, grad_Z) -> np.ndarray:
    """Row-wise least-squares multipliers for ``(grad_Z - diag(lam)) A ~ 0``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    G = np.asarray(grad_Z, dtype=float)
    sq = np.sum(A * A, axis=1)
    if np.any(sq == 0):
        raise ValueError("multipliers are undefined for a zero row")
    return np.sum((G @ A) * A, axis=1) / sq


def column_basis(Z, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis of the column space of a symmetric PSD matrix."""
    w, U = np.linalg.eigh(0.5 * (Z + Z.T))
    top = max(float(w[-1]), 0.0)
    return U[:, w > rtol * top] if top > 0 else U[:, :0]


def lagrangian_grad(A, lam, truth: GroundTruth, exp: HermiteExpansion, activation=None) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    G, _ = risk_derivatives(A @ A.T, truth, exp, activation)
    return 2.0 * (G - np.diag(lam)) @ A


def lagrangian_hvp(A, lam, B, truth: GroundTruth, exp: HermiteExpansion, activation=None) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    G, H = risk_derivatives(A @ A.T, truth, exp, activation)
    M = B @ A.T + A @ B.T
    return 2.0 * (G - np.diag(lam)) @ B + 2.0 * (H * M) @ A


def tangent_project(B, A) -> np.ndarray:
    """Remove from each row of B its component along the matching row of A."""
    B = np.array(B, dtype=float)
    sq = np.sum(A * A, axis=1)
    B -= (np.sum(B * A, axis=1) / sq)[:, None] * A
    return B


def _curvature(S, H, A, B) -> float:
    M = B @ A.T + A @ B.T
    return float((2.0 * np.sum(B * (S @ B)) + np.sum(H * M * M)) / np.sum(B * B))


def sosp_residual(
    A,
    exp: HermiteExpansion,
    truth: GroundTruth,
    probes: int = DEFAULT_PROBES,
    seed: int = 0,
    activation: Optional[ActivationSpec] = None,
) -> StationarityCertificate:
    """Approximate-SOSP residuals of A.

    ``eps_grad`` is the spectral norm of ``S`` restricted to the column space
    of A, so it bounds ``||S a||/||a||`` for every basis vector at once.
    Curvature is the minimum normalized quadratic form over ``probes``
    random tangent directions; when A has a non-trivial null space the
    directions ``b v^T`` (``A v = 0``, ``b`` an eigenvector of S) are probed
    as well, since random probes almost never find them.
    """
    _unit_truth(truth)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != truth.d:
        raise ValueError("A and the ground truth disagree on d")
    Z = A @ A.T
    G, H = risk_derivatives(Z, truth, exp, activation)
    lam = fit_multipliers(A, G)
    S = G - np.diag(lam)
    eps_feas = float(np.max(np.abs(np.diag(Z) - np.diag(truth.Z_star))))
    U = column_basis(Z)
    eps_grad = float(np.linalg.norm(S @ U, 2)) if U.shape[1] else 0.0

    rng = np.random.default_rng(seed)
    curv = np.inf
    for _ in range(probes):
        B = tangent_project(rng.standard_normal(A.shape), A)
        if np.any(B):
            curv = min(curv, _curvature(S, H, A, B))
    # null directions of A on the right
    _, sv, Vt = np.linalg.svd(A)
    rank = int(np.sum(sv > RANK_RTOL * (sv[0] if sv.size else 0.0)))
    if rank < A.shape[1]:
        w, E = np.linalg.eigh(S)
        for v in Vt[rank:]:
            for j in range(E.shape[1]):
                curv = min(curv, _curvature(S, H, A, np.outer(E[:, j], v)))
    if not np.isfinite(curv):
        curv = 0.0
    return StationarityCertificate(lam=lam, S=S, eps_feas=eps_feas, eps_grad=eps_grad, eps_curv=curv)


def fosp_certificate(
    Z,
    exp: HermiteExpansion,
    truth: GroundTruth,
    diag_tol: float = 1e-6,
    psd_tol: float = 1e-8,
    activation: Optional[ActivationSpec] = None,
) -> FospCertificate:
    """Smallest eps for which Z passes the approximate-FOSP conditions.

    ``eps = max(max_j ||S u_j||, -lambda_min(S))`` over an orthonormal basis
    ``u_j`` of the column space (spectral norm of ``S U``).
    """
    _unit_truth(truth)
    Z = np.asarray(Z, dtype=float)
    if Z.shape != truth.Z_star.shape:
        raise ValueError("Z and the ground truth disagree on d")
    if not np.allclose(Z, Z.T, atol=1e-12, rtol=0):
        raise ValueError("Z must be symmetric")
    Z = 0.5 * (Z + Z.T)
    w, Q = np.linalg.eigh(Z)
    if w[0] < -psd_tol:
        raise ValueError(f"Z is not PSD (min eigenvalue {w[0]:.3g})")
    diag_err = float(np.max(np.abs(np.diag(Z) - np.diag(truth.Z_star))))
    if diag_err > diag_tol:
        raise ValueError(f"diagonal constraint violated by {diag_err:.3g}")
    keep = w > RANK_RTOL * max(float(w[-1]), 0.0)
    U = Q[:, keep]
    F = U * np.sqrt(w[keep])
    G, _ = risk_derivatives(Z, truth, exp, activation)
    sigma = fit_multipliers(F, G)
    S = G - np.diag(sigma)
    grad_part = float(np.linalg.norm(S @ U, 2)) if U.shape[1] else 0.0
    psd_part = max(0.0, -float(np.linalg.eigvalsh(S)[0]))
    return FospCertificate(sigma, S, max(grad_part, psd_part))


def recovery_bound_check(Z, eps: float, sigma1: float, truth: GroundTruth, tol: float = 1e-6) -> RecoveryCheck:
    """``||Z - Z*||_F <= eps / sigma1^4`` (with additive tolerance)."""
    if sigma1 == 0:
        raise ValueError("the bound needs a non-zero first Hermite coefficient")
    lhs = float(np.linalg.norm(np.asarray(Z, dtype=float) - truth.Z_star))
    rhs = float(eps) / sigma1**4
    return RecoveryCheck(lhs, rhs, lhs <= rhs + tol)


def scalar_stationary_scan(
    exp: HermiteExpansion,
    z_star: float,
    grid_size: int = 10_000,
    activation: Optional[ActivationSpec] = None,
):
    """Intervals of ``[-1, 1]`` where the per-entry loss derivative vanishes.

    Sign changes between consecutive non-zero grid values give an interval
    ``(lo, hi)``; runs of exact zeros are folded into the surrounding
    interval, and zero runs touching an endpoint are reported as well.
    """
    if abs(z_star) > 1:
        raise ValueError("z_star must lie in [-1, 1]")
    if grid_size < 2:
        raise ValueError("grid needs at least two points")
    x = np.linspace(-1.0, 1.0, grid_size)
    f = np.asarray(scalar_loss_derivative(exp, z_star, x, activation), dtype=float)
    s = np.sign(f)
    nz = np.flatnonzero(s)
    out = []
    if nz.size == 0:
        return [(-1.0, 1.0)]
    if nz[0] > 0:
        out.append((float(x[0]), float(x[nz[0]])))
    for i, j in zip(nz[:-1], nz[1:]):
        if s[i] != s[j] or j > i + 1:
            out.append((float(x[i]), float(x[j])))
    if nz[-1] < grid_size - 1:
        out.append((float(x[nz[-1]]), float(x[-1])))
    return out
