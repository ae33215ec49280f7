import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onelayer_gan import kernels
from onelayer_gan.model import get_activation, make_rng

KINDS = ["identity", "tanh", "sigmoid", "relu", "leaky_relu"]
needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not importable")


def _both(kind, d, k, m, seed):
    act = get_activation(kind, 0.2)
    rng = make_rng(seed)
    A = rng.standard_normal((d, k))
    Z = rng.standard_normal((k, m))
    R = rng.standard_normal((d, d))
    R = R + R.T
    out = {}
    for name in ("numba", "numpy"):
        with kernels.use_backend(name):
            Y, D1, S = kernels.forward_stats(A, Z, act.code, act.leak)
            out[name] = (Y, D1, S, kernels.grad_from_residual(Y, D1, Z, R))
    return act, A, Z, out


@needs_numba
@pytest.mark.parametrize("kind", KINDS)
def test_backends_agree(kind):
    act, A, Z, out = _both(kind, 5, 3, 400, 1)
    for a, b in zip(out["numba"], out["numpy"]):
        assert np.allclose(a, b, rtol=1e-12, atol=1e-13)
    assert np.allclose(out["numpy"][0], act.value(A @ Z))
    assert np.allclose(out["numpy"][1], act.d1(A @ Z))


@needs_numba
@given(st.sampled_from(KINDS), st.integers(1, 6), st.integers(1, 4), st.integers(1, 50), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_backends_agree_property(kind, d, k, m, seed):
    _, _, _, out = _both(kind, d, k, m, seed)
    for a, b in zip(out["numba"], out["numpy"]):
        assert np.allclose(a, b, rtol=1e-11, atol=1e-12)


def test_numpy_gradient_matches_loop():
    act = get_activation("tanh")
    rng = make_rng(2)
    A, Z = rng.standard_normal((3, 2)), rng.standard_normal((2, 7))
    R = np.eye(3) + 0.1
    with kernels.use_backend("numpy"):
        Y, D1, _ = kernels.forward_stats(A, Z, act.code)
        G = kernels.grad_from_residual(Y, D1, Z, R)
    ref = sum(np.diag(D1[:, j]) @ R @ Y[:, [j]] @ Z[:, [j]].T for j in range(7)) * 2 / 7
    assert np.allclose(G, ref)


@needs_numba
def test_auto_routing():
    with kernels.use_backend("auto"):
        assert kernels.resolve_backend(get_activation("tanh").code) == "numpy"
        assert kernels.resolve_backend(get_activation("relu").code) == "numba"
    with kernels.use_backend("numpy"):
        assert kernels.resolve_backend(get_activation("relu").code) == "numpy"


def test_set_backend_rejects_unknown():
    with pytest.raises(ValueError):
        kernels.set_backend("cuda")


def test_use_backend_restores():
    before = kernels.get_backend()
    with pytest.raises(RuntimeError):
        with kernels.use_backend("numpy"):
            raise RuntimeError
    assert kernels.get_backend() == before


def test_env_flag_forces_numpy():
    env = dict(os.environ, ONELAYER_GAN_NO_NUMBA="1")
    code = "from onelayer_gan import kernels; print(kernels.get_backend())"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
