import numpy as np
import pytest

from vpident import HardeningParams, MaterialParams, torsion_program


@pytest.fixture(scope="session")
def truth():
    return HardeningParams(gamma=435.22, beta=2.625, c1=1661.7, c2=24672.0,
                           kappa1=0.003810, kappa2=0.004282)


@pytest.fixture(scope="session")
def material(truth):
    return MaterialParams(k=135600.0, mu=52000.0, eta=5.0e5, m=2.26, K=335.0,
                          hardening=truth)


@pytest.fixture(scope="session")
def default_program():
    program, _ = torsion_program(0.5, [0.25, -0.2, 0.3], 800, 500.0)
    return program


@pytest.fixture(scope="session")
def small_program():
    """Cheap non-monotonic program for tests that fit repeatedly."""
    program, _ = torsion_program(0.5, [0.12, -0.08, 0.15], 60, 120.0)
    return program


def random_spd(rng, scale=0.1):
    g = rng.normal(size=(3, 3)) * scale
    a = np.eye(3) + 0.5 * (g + g.T)
    return a @ a.T


def random_spd_unimodular(rng, scale=0.1):
    a = random_spd(rng, scale)
    return a / np.cbrt(np.linalg.det(a))
