import numpy as np
import pytest

from sparsefd.basis import dim_poly, identity, laplacian, partial

ACCEPTANCE_RESULTS = {}


def random_ball(rng, m, d, radius=1.0):
    """m points uniformly distributed in the d-ball."""
    x = rng.normal(size=(m, d))
    x /= np.linalg.norm(x, axis=1)[:, None]
    return radius * x * rng.uniform(size=(m, 1)) ** (1.0 / d)


def operator_choices(d, q):
    ops = [partial(d, 0), identity(d)]
    if q > 2:
        ops += [laplacian(d), laplacian(d) + partial(d, 0)]
    return ops


def random_stencil_setup(rng, d=None, q=None, with_center=None):
    """(z, Y, q, D) with nodes in the unit ball around z, m in [nu, 4 nu]."""
    d = int(rng.integers(1, 4)) if d is None else d
    q = int(rng.integers(2, 6)) if q is None else q
    ops = operator_choices(d, q)
    D = ops[int(rng.integers(len(ops)))]
    nu = dim_poly(d, q)
    m = int(rng.integers(nu, 4 * nu + 1))
    z = rng.uniform(-1, 1, size=d)
    Y = z + random_ball(rng, m, d)
    if with_center is None:
        with_center = rng.random() < 0.5
    if with_center:
        Y[int(rng.integers(m))] = z
    return z, Y, q, D


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        ok, msg = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key:2d}: {msg}")
