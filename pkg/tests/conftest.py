import numpy as np
import pytest
import scipy.sparse as sp

from spherenewton.instances import AvvfInstance


def make_instance(A, p_star, seed=0, density=1.0):
    A = np.asarray(A, dtype=float)
    p_star = np.asarray(p_star, dtype=float)
    b = A @ p_star - np.abs(p_star)
    sigma = float(np.linalg.svd(A, compute_uv=False)[-1])
    return AvvfInstance(A=sp.csr_matrix(A), b=b, planted_solution=p_star, seed=seed,
                        density=density, sigma_min=sigma)


@pytest.fixture
def tiny_instance():
    """A = 4 I, p* = e1, so b = (3, 0)."""
    return make_instance(4.0 * np.eye(2), [1.0, 0.0])


@pytest.fixture
def rng():
    return np.random.default_rng(20201)


def random_point(rng, n):
    x = rng.normal(size=n)
    return x / np.linalg.norm(x)


def random_tangent(rng, p, scale=1.0):
    x = rng.normal(size=p.size)
    # two passes: one leaves O(eps |x| / |x_t|) along p when x is nearly parallel to p
    x -= (p @ x) * p
    x -= (p @ x) * p
    return scale * x / np.linalg.norm(x)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log
    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(acceptance_log.LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
