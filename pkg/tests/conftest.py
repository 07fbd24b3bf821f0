import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from circulant_qc.sim import RegisterLayout, StateVector

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def sys_layout(L, name="sys"):
    return RegisterLayout.of((name, L))


def basis(L, k, name="sys"):
    return StateVector.basis(sys_layout(L, name), **{name: k})


def random_vector(rng, n, complex_=True):
    v = rng.normal(size=n) + (1j * rng.normal(size=n) if complex_ else 0)
    return v / np.linalg.norm(v)


def random_unitary(rng, n):
    q, r = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def hermitian_params(rng, N):
    c = rng.random(N)
    c = (c + np.roll(c[::-1], 1)) / 2
    return c / c.sum()


def positive_definite_params(rng, N, lo=0.55, hi=0.9):
    """Hermitian, nonnegative, with c0 > 1/2 so every eigenvalue is positive."""
    c = hermitian_params(rng, N)
    c[0] = 0
    c0 = rng.uniform(lo, hi)
    c = c / c.sum() * (1 - c0) if c.sum() > 0 else c
    c[0] = c0
    return c / c.sum()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
