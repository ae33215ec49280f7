import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from onelayer_gan.model import (
    GeneratorParams,
    GroundTruth,
    generate,
    get_activation,
    identity,
    leaky_relu,
    make_rng,
    quad_disc,
    rectified_adjusted_disc,
    relu,
    sample_latent,
    sigmoid,
    tanh,
)

ALL = [identity(), tanh(), sigmoid(), relu(), leaky_relu(0.2)]
GRID = np.linspace(-5, 5, 2001)


@pytest.mark.parametrize("act", ALL, ids=lambda a: a.kind)
def test_derivatives_match_finite_differences(act):
    x = GRID[np.all(np.abs(GRID[:, None] - np.array(act.kinks or [99.0])[None, :]) > 1e-3, axis=1)]
    h = 1e-6
    fd1 = (act.value(x + h) - act.value(x - h)) / (2 * h)
    fd2 = (act.d1(x + h) - act.d1(x - h)) / (2 * h)
    assert np.max(np.abs(fd1 - act.d1(x))) <= 1e-6
    assert np.max(np.abs(fd2 - act.d2(x))) <= 1e-6


@pytest.mark.parametrize("act,C", [(tanh(), 0.0), (sigmoid(), 0.5), (identity(), 0.0)], ids=["tanh", "sigmoid", "identity"])
def test_bias_constant(act, C):
    assert act.bias_constant == C
    assert act.odd_plus_constant
    assert np.max(np.abs(act.value(GRID) + act.value(-GRID) - 2 * C)) <= 1e-12


@pytest.mark.parametrize("act", [a for a in ALL if a.lipschitz_smooth], ids=lambda a: a.kind)
def test_lipschitz_and_smooth(act):
    a, b = np.meshgrid(GRID[::20], GRID[::20])
    off = a != b
    assert np.all(np.abs(act.value(a) - act.value(b))[off] <= np.abs(a - b)[off] + 1e-15)
    assert np.all(np.abs(act.d1(a) - act.d1(b))[off] <= np.abs(a - b)[off] + 1e-15)


def test_flags():
    assert not relu().odd_plus_constant and relu().even_part_increasing
    assert leaky_relu(0.3).even_part_increasing and leaky_relu(0.3).leak == 0.3
    assert tanh().odd_hermite and sigmoid().odd_hermite
    assert not leaky_relu().lipschitz_smooth


def test_even_part_increasing():
    for act in (relu(), leaky_relu(0.2)):
        even = 0.5 * (act.value(GRID[GRID >= 0]) + act.value(-GRID[GRID >= 0]))
        assert np.all(even >= 0) and np.all(np.diff(even) > 0)


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 1.5])
def test_leak_out_of_range(alpha):
    with pytest.raises(ValueError):
        leaky_relu(alpha)


def test_get_activation():
    assert get_activation("Leaky-ReLU", 0.1).leak == 0.1
    assert get_activation("tanh").kind == "tanh"
    with pytest.raises(ValueError):
        get_activation("swish")


def test_sample_latent_deterministic():
    a = sample_latent(2, 4, make_rng(7))
    b = sample_latent(2, 4, make_rng(7))
    assert a.shape == (2, 4)
    assert np.array_equal(a, b)


def test_sample_latent_moments():
    z = sample_latent(3, 100_000, make_rng(1))
    assert np.all(np.abs(z.mean(axis=1)) <= 0.02)
    z = sample_latent(1, 100_000, make_rng(2))
    assert abs(z.var(ddof=1) - 1) <= 0.02


def test_sample_latent_rejects_empty():
    with pytest.raises(ValueError):
        sample_latent(0, 5, make_rng(0))


def test_make_rng_streams_differ():
    assert not np.array_equal(make_rng(1, 2).standard_normal(4), make_rng(1, 3).standard_normal(4))


def test_generate():
    rng = make_rng(3)
    A = rng.standard_normal((3, 2))
    z = rng.standard_normal((2, 10))
    assert np.array_equal(generate(GeneratorParams(A), z, identity()), A @ z)
    assert np.allclose(generate(np.zeros((3, 2)), z, sigmoid()), 0.5)
    out = generate(5 * A, z, tanh())
    assert np.all(np.abs(out) < 1)
    assert generate(A, z[:, 0], tanh()).shape == (3,)
    with pytest.raises(ValueError):
        generate(A, rng.standard_normal((3, 4)), tanh())


def test_generate_reproducible():
    def run():
        rng = make_rng(42)
        return generate(rng.standard_normal((4, 3)), sample_latent(3, 50, rng), tanh())

    assert run().tobytes() == run().tobytes()


def test_rectified_adjusted_disc():
    C = 0.5
    assert rectified_adjusted_disc(np.ones(3), np.full(3, C), C) == 0.0
    assert rectified_adjusted_disc(np.zeros(3), np.array([3.0, 1.0, 2.0]), C) == 0.0
    assert rectified_adjusted_disc(np.array([1.0, 0, 0]), np.array([C + 2, 9.0, 9.0]), C) == 2.0


def test_quad_disc():
    x = np.array([1.0, 1.0, 0.0])
    assert quad_disc(np.eye(3), x) == pytest.approx(2.0)
    assert quad_disc(np.eye(3), np.zeros(3)) == 0.0
    V = np.zeros((3, 3))
    V[0, 1] = V[1, 0] = 1
    assert quad_disc(V, x) == 2.0


@given(st.integers(1, 5), st.integers(1, 4), st.integers(0, 2**32))
def test_ground_truth_invariants(d, k0, seed):
    t = GroundTruth.random_unit_rows(d, k0, make_rng(seed))
    assert np.allclose(t.Z_star, t.Z_star.T)
    assert np.linalg.eigvalsh(t.Z_star)[0] >= -1e-12
    assert np.allclose(np.diag(t.Z_star), t.row_norms**2)
    assert t.recovery_error(t.A_star) == 0.0


def test_generator_params_feasibility():
    p = GeneratorParams(np.array([[3.0, 4.0], [0.0, 2.0]]), row_norm_targets=[5.0, 2.0])
    assert p.is_feasible()
    assert not GeneratorParams(np.eye(2), row_norm_targets=[1.0, 2.0]).is_feasible()
    with pytest.raises(ValueError):
        GeneratorParams(np.eye(2), row_norm_targets=[1.0, 0.0])
