"""Hot inner loops of the joint-distribution training step.

Two interchangeable implementations compute the same quantities:

* ``numba`` -- explicit row-major loops compiled with ``@njit``;
* ``numpy`` -- vectorized array expressions.

A third setting, ``auto`` (the default when numba imports), picks whichever
was faster in ``benchmarks/bench_kernels.py``: the numba forward pass for
the piecewise-linear activations, numpy everywhere else. numpy's SIMD tanh
beats numba's scalar ``exp`` when LLVM has no vector math library, and the
gradient contraction is a BLAS matrix product. Setting
the environment variable ``ONELAYER_GAN_NO_NUMBA`` to a true value forces
``numpy``. :func:`use_backend` switches temporarily, which is how the tests
and the benchmark compare them.
"""

from __future__ import annotations

import math
import os
from contextlib import contextmanager

import numpy as np

from .model import IDENTITY, LEAKY_RELU, RELU, SIGMOID, TANH

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

ENV_FLAG = "ONELAYER_GAN_NO_NUMBA"
BACKENDS = ("auto", "numba", "numpy")
_VECTOR_MATH_CODES = (TANH, SIGMOID)


def _default_backend() -> str:
    disabled = os.environ.get(ENV_FLAG, "").strip().lower() not in ("", "0", "false", "no")
    return "auto" if HAVE_NUMBA and not disabled else "numpy"


_backend = _default_backend()


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in BACKENDS:
        raise ValueError(f"unknown backend {name!r}")
    if name != "numpy" and not HAVE_NUMBA:
        raise RuntimeError("numba is not importable")
    _backend = name


@contextmanager
def use_backend(name: str):
    previous = _backend
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


# --------------------------------------------------------------------------
# numpy path


def _np_act(code: int, leak: float, U: np.ndarray):
    if code == IDENTITY:
        return U.copy(), np.ones_like(U)
    if code == TANH:
        Y = np.tanh(U)
        return Y, 1.0 - Y * Y
    if code == SIGMOID:
        Y = 0.5 * (1.0 + np.tanh(0.5 * U))
        return Y, Y * (1.0 - Y)
    pos = U > 0
    if code == RELU:
        return np.where(pos, U, 0.0), pos.astype(float)
    if code == LEAKY_RELU:
        return np.where(pos, U, leak * U), np.where(pos, 1.0, leak)
    raise ValueError(f"unknown activation code {code}")


def _np_forward(A, Z, code, leak):
    Y, D1 = _np_act(code, leak, A @ Z)
    S = (Y @ Y.T) / Z.shape[1]
    return Y, D1, 0.5 * (S + S.T)


def _np_grad(Y, D1, Z, R):
    return (2.0 / Z.shape[1]) * ((D1 * (R @ Y)) @ Z.T)


# --------------------------------------------------------------------------
# numba path

if HAVE_NUMBA:

    @njit(cache=True)
    def _nb_tanh(u):
        # exp-based form; scalar math.tanh is several times slower here
        e = math.exp(-2.0 * abs(u))
        t = (1.0 - e) / (1.0 + e)
        return t if u >= 0.0 else -t

    @njit(cache=True)
    def _nb_act_row(code, leak, u, y, g):
        m = u.shape[0]
        if code == 0:
            for j in range(m):
                y[j] = u[j]
                g[j] = 1.0
        elif code == 1:
            for j in range(m):
                t = _nb_tanh(u[j])
                y[j] = t
                g[j] = 1.0 - t * t
        elif code == 2:
            for j in range(m):
                s = 0.5 * (1.0 + _nb_tanh(0.5 * u[j]))
                y[j] = s
                g[j] = s * (1.0 - s)
        elif code == 3:
            for j in range(m):
                if u[j] > 0.0:
                    y[j] = u[j]
                    g[j] = 1.0
                else:
                    y[j] = 0.0
                    g[j] = 0.0
        else:
            for j in range(m):
                if u[j] > 0.0:
                    y[j] = u[j]
                    g[j] = 1.0
                else:
                    y[j] = leak * u[j]
                    g[j] = leak

    @njit(cache=True)
    def _nb_forward(A, Z, code, leak):
        d, k = A.shape
        m = Z.shape[1]
        U = np.zeros((d, m))
        Y = np.empty((d, m))
        D1 = np.empty((d, m))
        # row-major sweeps keep the sample loop innermost and contiguous
        for i in range(d):
            for l in range(k):
                a = A[i, l]
                for j in range(m):
                    U[i, j] += a * Z[l, j]
            _nb_act_row(code, leak, U[i], Y[i], D1[i])
        S = np.empty((d, d))
        for i in range(d):
            for r in range(i, d):
                acc = 0.0
                for j in range(m):
                    acc += Y[i, j] * Y[r, j]
                S[i, r] = acc / m
                S[r, i] = S[i, r]
        return Y, D1, S

    @njit(cache=True)
    def _nb_grad(Y, D1, Z, R):
        d, m = Y.shape
        k = Z.shape[0]
        W = np.zeros((d, m))
        for i in range(d):
            for r in range(d):
                c = R[i, r]
                for j in range(m):
                    W[i, j] += c * Y[r, j]
            for j in range(m):
                W[i, j] *= D1[i, j]
        G = np.empty((d, k))
        scale = 2.0 / m
        for i in range(d):
            for l in range(k):
                acc = 0.0
                for j in range(m):
                    acc += W[i, j] * Z[l, j]
                G[i, l] = acc * scale
        return G


# --------------------------------------------------------------------------
# dispatch


def resolve_backend(code: int) -> str:
    """Concrete implementation used for activation ``code`` under the current setting."""
    if _backend == "auto":
        return "numpy" if code in _VECTOR_MATH_CODES else "numba"
    return _backend


def forward_stats(A, Z, code: int, leak: float = 0.0):
    """Return ``(Y, D1, S_bar)`` with ``Y = phi(A Z)``, ``D1 = phi'(A Z)``, ``S_bar = Y Y^T / m``."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    Z = np.ascontiguousarray(Z, dtype=np.float64)
    if resolve_backend(code) == "numba":
        return _nb_forward(A, Z, int(code), float(leak))
    return _np_forward(A, Z, int(code), float(leak))


def grad_from_residual(Y, D1, Z, R):
    """``(2/m) sum_j diag(D1_j) R Y_j z_j^T`` for a symmetric residual ``R``."""
    R = np.ascontiguousarray(R, dtype=np.float64)
    if _backend == "numba":
        return _nb_grad(np.ascontiguousarray(Y), np.ascontiguousarray(D1), np.ascontiguousarray(Z), R)
    return _np_grad(Y, D1, Z, R)
