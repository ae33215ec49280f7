import numpy as np
import pytest

from onelayer_gan.hermite import expand_activation
from onelayer_gan.model import get_activation


def mc_pair(f, alpha, beta, rho, samples=1_000_000, seed=0):
    """Plain Monte Carlo mean and standard error of f(alpha x) f(beta y), corr(x, y) = rho."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(samples)
    y = rho * x + np.sqrt(max(0.0, 1 - rho * rho)) * rng.standard_normal(samples)
    p = f(alpha * x) * f(beta * y)
    return p.mean(), p.std(ddof=1) / np.sqrt(samples)


def fd_grad(fun, A, h=1e-6):
    G = np.zeros_like(A)
    for idx in np.ndindex(A.shape):
        E = np.zeros_like(A)
        E[idx] = h
        G[idx] = (fun(A + E) - fun(A - E)) / (2 * h)
    return G


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


@pytest.fixture(scope="session")
def tanh_act():
    return get_activation("tanh")


@pytest.fixture(scope="session")
def leaky_act():
    return get_activation("leaky_relu", 0.2)


@pytest.fixture(scope="session")
def tanh_exp(tanh_act):
    return expand_activation(tanh_act)


@pytest.fixture(scope="session")
def leaky_exp(leaky_act):
    return expand_activation(leaky_act)


# Acceptance lines are echoed in the terminal summary so they show up even
# when pytest captures stdout.
ACCEPTANCE_LINES = []


def report(criterion, passed, detail):
    line = f"CRITERION {criterion}: {'PASS' if passed else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
