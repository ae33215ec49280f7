"""Closed-form Hermite kernels against Monte Carlo."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..hermite import DEFAULT_DEGREE, dual_kernel, expand_activation, nonunit_kernel
from ..model import ActivationSpec, get_activation, make_rng

DEFAULT_RHOS = tuple(np.linspace(-1.0, 1.0, 9))
DEFAULT_SCALES = ((1.3, 0.7), (0.8, 1.2), (0.6, 0.9))
DEFAULT_KINDS = ("tanh", "sigmoid", "leaky_relu")
CHECK_COLUMNS = ("activation", "kernel", "alpha", "beta", "rho", "closed_form", "mc_mean", "mc_se", "z", "pass")


@dataclass(frozen=True)
class KernelCheck:
    activation: str
    kernel: str
    alpha: float
    beta: float
    rho: float
    closed_form: float
    mc_mean: float
    mc_se: float

    @property
    def z(self) -> float:
        return (self.closed_form - self.mc_mean) / self.mc_se if self.mc_se > 0 else 0.0

    def passes(self, n_se: float = 3.0) -> bool:
        return abs(self.closed_form - self.mc_mean) <= n_se * self.mc_se

    def row(self):
        return (self.activation, self.kernel, self.alpha, self.beta, self.rho,
                self.closed_form, self.mc_mean, self.mc_se, self.z, int(self.passes()))


def mc_pair_expectation(activation: ActivationSpec, alpha: float, beta: float, rho: float, samples: int, rng):
    """Mean and standard error of ``phi(alpha x) phi(beta y)``, ``corr(x, y) = rho``."""
    x = rng.standard_normal(samples)
    w = rng.standard_normal(samples)
    y = rho * x + np.sqrt(max(0.0, 1.0 - rho * rho)) * w
    prod = activation.value(alpha * x) * activation.value(beta * y)
    return float(prod.mean()), float(prod.std(ddof=1) / np.sqrt(samples))


def run_kernel_checks(
    kinds=DEFAULT_KINDS,
    rhos=DEFAULT_RHOS,
    scales=DEFAULT_SCALES,
    samples: int = 1_000_000,
    seed: int = 0,
    degree: int = DEFAULT_DEGREE,
    leak: float = 0.2,
):
    """Unit-scale dual kernel and every non-unit scale pair, each on every rho.

    Each comparison gets its own independent Monte Carlo stream.
    """
    out = []
    for ai, kind in enumerate(kinds):
        act = get_activation(kind, leak)
        exp = expand_activation(act, degree)
        cases = [("dual", 1.0, 1.0)] + [("nonunit", a, b) for a, b in scales]
        for ci, (name, a, b) in enumerate(cases):
            for ri, rho in enumerate(rhos):
                rho = float(rho)
                cf = dual_kernel(exp, rho) if name == "dual" else nonunit_kernel(exp, a, b, rho)
                mean, se = mc_pair_expectation(act, a, b, rho, samples, make_rng(seed, ai, ci, ri))
                out.append(KernelCheck(act.describe(), name, a, b, rho, float(cf), mean, se))
    return out
