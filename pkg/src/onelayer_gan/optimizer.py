"""Two-stage training: marginal row norms first, then projected stochastic GDA.

Stage 1 plays the first-moment game coordinate by coordinate; its fixed point
pins down each ``||a_i||``. Stage 2 plays the quadratic-discriminator game on
the sphere product ``{A : ||a_i|| = target_i}``, with the discriminator
maximized exactly at every step and a small noise kick on A.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .hermite import gaussian_expectation
from .losses import empirical_cov, first_moment_feature, f1_value_grad
from .model import ActivationSpec, GroundTruth, make_rng, sample_latent

STAGES = ("marginal", "joint", "both")
EARLY_STOP_PATIENCE = 50


class DivergenceError(RuntimeError):
    """Raised when the empirical loss becomes non-finite."""

    def __init__(self, iteration: int, value: float):
        super().__init__(f"non-finite loss {value!r} at iteration {iteration}")
        self.iteration = iteration
        self.value = value


@dataclass
class TrainConfig:
    """Hyperparameters of both stages.

    ``noise_scale=None`` means ``0.01 * eta``. ``k=None`` means ``k = d``.
    ``marginal_eta=None`` picks the Stage-1 step from the activation (see
    :func:`marginal_step`).
    ``record_every`` thins the trajectory (the last iteration is always
    kept); ``timing`` turns on the ``wall_ms`` column, which otherwise stays
    0 so that repeated runs produce identical files.
    """

    eta: float = 0.05
    T: int = 2000
    m: int = 1000
    n: int = 1000
    noise_scale: Optional[float] = None
    seed: int = 0
    stage: str = "joint"
    stop_tol: float = 0.0
    eta_V: float = 1.0
    k: Optional[int] = None
    marginal_eta: Optional[float] = None
    marginal_T: int = 3000
    marginal_m: int = 2000
    marginal_tol: float = 0.02
    record_every: int = 1
    timing: bool = False

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        for name in ("T", "m", "n"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.noise_scale is not None and self.noise_scale < 0:
            raise ValueError("noise_scale must be non-negative")
        if self.stage not in STAGES:
            raise ValueError(f"stage must be one of {STAGES}")
        if self.stop_tol < 0:
            raise ValueError("stop_tol must be non-negative")
        if not self.eta_V > 0:
            raise ValueError("eta_V must be positive")
        if self.k is not None and self.k < 1:
            raise ValueError("k must be positive")
        if (self.marginal_eta is not None and self.marginal_eta <= 0) or self.marginal_T < 1 or self.marginal_m < 1:
            raise ValueError("marginal stage settings must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")

    @property
    def radius(self) -> float:
        return 0.01 * self.eta if self.noise_scale is None else float(self.noise_scale)


@dataclass
class TrajectoryRecord:
    """Per-iteration metrics of one run plus its final iterate."""

    iters: np.ndarray
    g_emp: np.ndarray
    rec_err: np.ndarray
    grad_norm: np.ndarray
    wall_ms: np.ndarray
    final_A: np.ndarray
    norm_targets: np.ndarray
    zero_row_events: int = 0
    stopped_early: bool = False

    @property
    def final_rec_err(self) -> float:
        return float(self.rec_err[-1]) if self.rec_err.size else float("nan")

    def __len__(self) -> int:
        return int(self.iters.size)

    def rows(self):
        for t, g, r, gn, w in zip(self.iters, self.g_emp, self.rec_err, self.grad_norm, self.wall_ms):
            yield int(t), float(g), float(r), float(gn), int(w)


@dataclass
class MarginalResult:
    norms: np.ndarray
    residual: float
    converged: bool
    targets: np.ndarray = field(repr=False)


def project_rows(A, targets, rng: Optional[np.random.Generator] = None, return_flags: bool = False):
    """Rescale each row of A to the matching target norm.

    A zero row has no direction to keep; it is replaced by a uniformly random
    direction at the target norm and flagged.
    """
    A = np.array(A, dtype=float, copy=True)
    targets = np.asarray(targets, dtype=float)
    if targets.shape != (A.shape[0],):
        raise ValueError("need one target per row")
    if np.any(targets <= 0):
        raise ValueError("targets must be strictly positive")
    norms = np.linalg.norm(A, axis=1)
    zero = norms == 0.0
    if zero.any():
        rng = np.random.default_rng() if rng is None else rng
        fresh = rng.standard_normal((int(zero.sum()), A.shape[1]))
        A[zero] = fresh
        norms[zero] = np.linalg.norm(fresh, axis=1)
    A *= (targets / norms)[:, None]
    return (A, zero) if return_flags else A


def random_feasible(d: int, k: int, targets, rng: np.random.Generator) -> np.ndarray:
    """Rows uniform on the sphere, scaled to ``targets``."""
    return project_rows(rng.standard_normal((d, k)), targets, rng)


# --------------------------------------------------------------------------
# Stage 1


def marginal_step(activation: ActivationSpec, scales=np.linspace(0.1, 3.0, 30)) -> float:
    """Stage-1 step ``1 / max_a s(a)^2`` with ``s(a) = d/da E[phi~(a z)]``.

    Along a row norm ``a`` one exact-v GDA step contracts the gap by
    ``1 - eta s(a)^2``; this step is the fastest that cannot overshoot on
    the scale range.
    """
    kinks = activation.kinks or (0.0,)
    h = 1e-4

    def mean(a):
        return gaussian_expectation(lambda x: first_moment_feature(activation.value(a * x), activation), kinks=kinks)

    s = max(abs(mean(a + h) - mean(a - h)) / (2 * h) for a in scales)
    return 1.0 / (s * s)


def learn_marginal_norms(samples, activation: ActivationSpec, config: TrainConfig, return_info: bool = False):
    """Estimate ``||a_i||`` by GDA on the regularized first-moment game.

    The discriminator step is exact (``v = gap``), so each step is a
    stochastic gradient step on ``||gap||^2 / 2``. The returned norms are the
    average of the second half of the iterates.
    """
    if not (activation.odd_plus_constant or activation.even_part_increasing):
        raise ValueError(f"{activation.describe()} has no monotone first-moment statistic")
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    d = X.shape[0]
    obs_mean = first_moment_feature(X, activation).mean(axis=1)
    if np.any(obs_mean <= 0) or not np.any(X):
        bad = np.flatnonzero(obs_mean <= 0).tolist()
        raise ValueError(f"coordinates {bad} carry no first-moment signal (zero generator row?)")
    k = config.k or d
    eta = config.marginal_eta if config.marginal_eta is not None else marginal_step(activation)
    rng = make_rng(config.seed, 1)
    A = random_feasible(d, k, np.ones(d), rng)
    v = np.zeros(d)
    half = config.marginal_T // 2
    acc = np.zeros(d)
    resid_acc = 0.0
    for t in range(config.marginal_T):
        z = sample_latent(k, config.marginal_m, rng)
        _, _, grad_v = f1_value_grad(A, v, None, z, activation, obs_mean=obs_mean)
        v = v + grad_v  # exact maximizer of the concave quadratic in v
        _, grad_A, _ = f1_value_grad(A, v, None, z, activation, obs_mean=obs_mean)
        A = A - eta * grad_A
        if t >= half:
            acc += np.linalg.norm(A, axis=1)
            resid_acc += float(np.linalg.norm(v))
    norms = acc / (config.marginal_T - half)
    # batch noise keeps the per-step gap away from 0; check the averaged fixed
    # point against a fresh large batch instead
    check = sample_latent(1, 200_000, rng)[0]
    gen = np.array([first_moment_feature(activation.value(a * check), activation).mean() for a in norms])
    residual = float(np.max(np.abs(gen - obs_mean) / obs_mean))
    converged = residual <= config.marginal_tol
    if not converged:
        warnings.warn(f"marginal stage did not converge: relative residual {residual:.3g}", RuntimeWarning, stacklevel=2)
    if return_info:
        return MarginalResult(norms, residual, converged, obs_mean)
    return norms


# --------------------------------------------------------------------------
# Stage 2


def _frobenius_sphere(shape, radius: float, rng: np.random.Generator) -> np.ndarray:
    e = rng.standard_normal(shape)
    nrm = np.linalg.norm(e)
    return e * (radius / nrm) if nrm > 0 else e


def sgda_run(
    truth_samples,
    activation: ActivationSpec,
    config: TrainConfig,
    norm_targets,
    truth: Optional[GroundTruth] = None,
    A0=None,
    callback: Optional[Callable] = None,
) -> TrajectoryRecord:
    """Projected stochastic GDA with exact discriminator steps.

    Per iteration ``t``: fresh latents, ``V <- V + eta_V (S_bar - X_n - V)``,
    ``A <- proj(A - eta (grad + e))`` with ``e`` uniform on the Frobenius
    sphere of radius ``config.radius``. ``g_emp`` and ``grad_norm`` are the
    batch values at the pre-update iterate; ``rec_err`` is taken after the
    update (NaN without ``truth``).

    ``callback(t, A, V, S_bar, cov)`` runs before each A update.
    """
    X = np.atleast_2d(np.asarray(truth_samples, dtype=float))
    d = X.shape[0]
    targets = np.asarray(norm_targets, dtype=float)
    if targets.shape != (d,) or np.any(targets <= 0):
        raise ValueError("norm_targets must be d positive numbers")
    k = config.k or d
    cov = empirical_cov(X)
    rng = make_rng(config.seed, 2)
    if A0 is None:
        A = random_feasible(d, k, targets, rng)
    else:
        A = np.array(A0, dtype=float)
        if A.shape != (d, k):
            raise ValueError(f"initial A must be {d} x {k}")
        A = project_rows(A, targets, rng)
    Z_star = truth.Z_star if truth is not None else None
    if Z_star is not None and Z_star.shape != (d, d):
        raise ValueError("ground truth dimension does not match the samples")

    code, leak = activation.code, activation.leak
    radius = config.radius
    eta = config.eta
    V = np.zeros((d, d))
    cap = config.T // config.record_every + 1
    it = np.empty(cap, dtype=np.int64)
    gs, rs, gn, ws = np.empty(cap), np.empty(cap), np.empty(cap), np.zeros(cap, dtype=np.int64)
    rows = 0
    zero_events = 0
    below = 0
    stopped = False
    t0 = time.perf_counter()
    X_n = cov.X_n
    eta_V = config.eta_V
    shape = A.shape
    for t in range(1, config.T + 1):
        z = rng.standard_normal((k, config.m))
        Y, D1, S = kernels.forward_stats(A, z, code, leak)
        R = S - X_n
        V = R if eta_V == 1.0 else V + eta_V * (R - V)  # ascent on V
        g = 0.5 * float(np.sum(R * R))
        if not np.isfinite(g):
            raise DivergenceError(t, g)
        if callback is not None:
            callback(t, A, V, S, cov)
        grad = kernels.grad_from_residual(Y, D1, z, V)
        if radius > 0:
            e = rng.standard_normal(shape)
            A = A - eta * (grad + e * (radius / np.sqrt(np.sum(e * e))))
        else:
            A = A - eta * grad
        nrm = np.sqrt(np.sum(A * A, axis=1))
        if np.all(nrm > 0):
            A *= (targets / nrm)[:, None]
        else:
            A, flags = project_rows(A, targets, rng, return_flags=True)
            zero_events += int(flags.sum())
        below = below + 1 if g < config.stop_tol else 0
        stopped = below >= EARLY_STOP_PATIENCE
        if t % config.record_every == 0 or t == config.T or stopped:
            it[rows] = t
            gs[rows] = g
            gn[rows] = float(np.linalg.norm(grad))
            if Z_star is not None:
                D = A @ A.T - Z_star
                rs[rows] = float(np.sqrt(np.sum(D * D)))
            else:
                rs[rows] = np.nan
            if config.timing:
                ws[rows] = int((time.perf_counter() - t0) * 1000.0)
            rows += 1
        if stopped:
            break
    return TrajectoryRecord(
        iters=it[:rows],
        g_emp=gs[:rows],
        rec_err=rs[:rows],
        grad_norm=gn[:rows],
        wall_ms=ws[:rows],
        final_A=A,
        norm_targets=targets,
        zero_row_events=zero_events,
        stopped_early=stopped,
    )


def train(
    truth_samples,
    activation: ActivationSpec,
    config: TrainConfig,
    truth: Optional[GroundTruth] = None,
    norm_targets=None,
):
    """Run the configured stage(s).

    ``marginal`` returns the norm estimates. ``joint`` needs ``norm_targets``
    (or ``truth`` to read them from). ``both`` feeds the Stage-1 estimates to
    Stage 2 as projection targets. Returns ``(norms, record_or_None)``.
    """
    if config.stage == "marginal":
        return learn_marginal_norms(truth_samples, activation, config), None
    if config.stage == "both":
        norms = learn_marginal_norms(truth_samples, activation, config)
    elif norm_targets is not None:
        norms = np.asarray(norm_targets, dtype=float)
    elif truth is not None:
        norms = truth.row_norms
    else:
        raise ValueError("joint stage needs norm targets or a ground truth")
    return norms, sgda_run(truth_samples, activation, config, norms, truth=truth)
