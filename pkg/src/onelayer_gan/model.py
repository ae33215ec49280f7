"""Activations and the one-layer generator with its discriminator families."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

# Integer codes shared with the compiled kernels.
IDENTITY, TANH, SIGMOID, RELU, LEAKY_RELU = range(5)
_KIND_CODES = {"identity": IDENTITY, "tanh": TANH, "sigmoid": SIGMOID, "relu": RELU, "leaky_relu": LEAKY_RELU}


@dataclass(frozen=True)
class ActivationSpec:
    """An entrywise activation with its derivatives and analytic flags.

    Flags record which structural assumptions the activation meets:

    * ``odd_plus_constant`` -- odd function plus a constant and increasing
      (selects the rectified first-moment discriminator);
    * ``even_part_increasing`` -- ``(phi(x) + phi(-x))/2`` non-negative and
      increasing on ``[0, inf)``;
    * ``odd_hermite`` -- even Hermite coefficients of degree >= 2 vanish and
      ``sigma_1 != 0``;
    * ``lipschitz_smooth`` -- 1-Lipschitz with 1-Lipschitz derivative.
    """

    kind: str
    value: Callable
    d1: Callable
    d2: Callable
    bias_constant: Optional[float]
    odd_plus_constant: bool
    even_part_increasing: bool
    odd_hermite: bool
    lipschitz_smooth: bool
    leak: float = 0.0
    kinks: tuple = field(default=())

    @property
    def code(self) -> int:
        return _KIND_CODES[self.kind]

    def __call__(self, x):
        return self.value(x)

    def describe(self) -> str:
        return f"leaky_relu(alpha={self.leak:g})" if self.kind == "leaky_relu" else self.kind


def _tanh_d1(x):
    t = np.tanh(x)
    return 1.0 - t * t


def _tanh_d2(x):
    t = np.tanh(x)
    return -2.0 * t * (1.0 - t * t)


def _sigmoid_d1(x):
    s = expit(x)
    return s * (1.0 - s)


def _sigmoid_d2(x):
    s = expit(x)
    return s * (1.0 - s) * (1.0 - 2.0 * s)


def _zeros(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def identity() -> ActivationSpec:
    return ActivationSpec(
        kind="identity",
        value=lambda x: np.asarray(x, dtype=float).copy(),
        d1=lambda x: np.ones_like(np.asarray(x, dtype=float)),
        d2=_zeros,
        bias_constant=0.0,
        odd_plus_constant=True,
        even_part_increasing=False,
        odd_hermite=True,
        lipschitz_smooth=True,
    )


def tanh() -> ActivationSpec:
    return ActivationSpec(
        kind="tanh",
        value=np.tanh,
        d1=_tanh_d1,
        d2=_tanh_d2,
        bias_constant=0.0,
        odd_plus_constant=True,
        even_part_increasing=False,
        odd_hermite=True,
        lipschitz_smooth=True,
    )


def sigmoid() -> ActivationSpec:
    return ActivationSpec(
        kind="sigmoid",
        value=expit,
        d1=_sigmoid_d1,
        d2=_sigmoid_d2,
        bias_constant=0.5,
        odd_plus_constant=True,
        even_part_increasing=False,
        odd_hermite=True,
        lipschitz_smooth=True,
    )


def relu() -> ActivationSpec:
    return ActivationSpec(
        kind="relu",
        value=lambda x: np.maximum(np.asarray(x, dtype=float), 0.0),
        d1=lambda x: (np.asarray(x) > 0).astype(float),
        d2=_zeros,
        bias_constant=None,
        odd_plus_constant=False,
        even_part_increasing=True,
        odd_hermite=False,
        lipschitz_smooth=False,
        kinks=(0.0,),
    )


def leaky_relu(alpha: float = 0.2) -> ActivationSpec:
    """``max(x, alpha x)``; the second derivative is taken as 0 everywhere."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("leakage must lie in (0, 1)")
    return ActivationSpec(
        kind="leaky_relu",
        value=lambda x: np.where(np.asarray(x) > 0, x, alpha * np.asarray(x, dtype=float)).astype(float),
        d1=lambda x: np.where(np.asarray(x) > 0, 1.0, alpha),
        d2=_zeros,
        bias_constant=None,
        odd_plus_constant=False,
        even_part_increasing=True,
        odd_hermite=False,
        lipschitz_smooth=False,
        leak=float(alpha),
        kinks=(0.0,),
    )


def get_activation(kind: str, leak: float = 0.2) -> ActivationSpec:
    """Look an activation up by name (``leaky_relu`` takes ``leak``)."""
    kind = kind.strip().lower().replace("-", "_")
    if kind in ("leaky_relu", "leaky", "lrelu"):
        return leaky_relu(leak)
    makers = {"identity": identity, "linear": identity, "tanh": tanh, "sigmoid": sigmoid, "relu": relu}
    if kind not in makers:
        raise ValueError(f"unknown activation {kind!r}")
    return makers[kind]()


@dataclass
class GeneratorParams:
    """Parameter matrix ``A`` (d x k) with optional per-row norm targets."""

    A: np.ndarray
    row_norm_targets: Optional[np.ndarray] = None

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if self.row_norm_targets is not None:
            t = np.asarray(self.row_norm_targets, dtype=float)
            if t.shape != (self.A.shape[0],) or np.any(t <= 0):
                raise ValueError("row_norm_targets must be d positive numbers")
            self.row_norm_targets = t

    @property
    def d(self) -> int:
        return self.A.shape[0]

    @property
    def k(self) -> int:
        return self.A.shape[1]

    def gram(self) -> np.ndarray:
        return self.A @ self.A.T

    def is_feasible(self, tol: float = 1e-10) -> bool:
        if self.row_norm_targets is None:
            return True
        return bool(np.all(np.abs(np.linalg.norm(self.A, axis=1) - self.row_norm_targets) <= tol))


@dataclass
class GroundTruth:
    """True generator ``A_star`` (d x k0) and its Gram matrix ``Z_star``."""

    A_star: np.ndarray
    Z_star: np.ndarray = field(init=False)
    row_norms: np.ndarray = field(init=False)

    def __post_init__(self):
        self.A_star = np.atleast_2d(np.asarray(self.A_star, dtype=float))
        Z = self.A_star @ self.A_star.T
        self.Z_star = 0.5 * (Z + Z.T)
        self.row_norms = np.linalg.norm(self.A_star, axis=1)

    @property
    def d(self) -> int:
        return self.A_star.shape[0]

    @property
    def k0(self) -> int:
        return self.A_star.shape[1]

    @classmethod
    def random_unit_rows(cls, d: int, k0: int, rng: np.random.Generator) -> "GroundTruth":
        A = rng.standard_normal((d, k0))
        A /= np.linalg.norm(A, axis=1, keepdims=True)
        return cls(A)

    def recovery_error(self, A: np.ndarray) -> float:
        """``||A A^T - Z_star||_F``."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        return float(np.linalg.norm(A @ A.T - self.Z_star))

    def gram_error(self, Z: np.ndarray) -> float:
        """``||Z - Z_star||_F``."""
        return float(np.linalg.norm(np.asarray(Z, dtype=float) - self.Z_star))


def make_rng(*entropy) -> np.random.Generator:
    """SFC64 generator keyed by a tuple of integers.

    SFC64 draws normals noticeably faster than the default PCG64, which
    matters because latent sampling dominates a training step.
    """
    return np.random.Generator(np.random.SFC64(np.random.SeedSequence(list(entropy))))


def sample_latent(k: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """``k x m`` matrix of i.i.d. standard normal latents (one column per draw)."""
    if k < 1 or m < 1:
        raise ValueError("k and m must be positive")
    return rng.standard_normal((k, m))


def generate(params, z, activation: ActivationSpec) -> np.ndarray:
    """``phi(A z)`` for a latent vector or a ``k x m`` batch."""
    A = params.A if isinstance(params, GeneratorParams) else np.atleast_2d(np.asarray(params, dtype=float))
    z = np.asarray(z, dtype=float)
    if z.shape[0] != A.shape[1]:
        raise ValueError(f"latent has {z.shape[0]} rows, generator expects {A.shape[1]}")
    return activation.value(A @ z)


def rectified_adjusted_disc(v, x, C: float):
    """``v^T relu(x - C)``; batched over columns of ``x``."""
    return np.asarray(v, dtype=float) @ np.maximum(np.asarray(x, dtype=float) - C, 0.0)


def quad_disc(V, x):
    """``x^T V x``; batched over columns of ``x``."""
    V = np.asarray(V, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return float(x @ V @ x)
    return np.einsum("im,ij,jm->m", x, V, x)
