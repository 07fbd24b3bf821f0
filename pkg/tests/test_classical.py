import numpy as np
import pytest
from hypothesis import given, strategies as st

from circulant_qc import classical as cl
from circulant_qc.errors import CircuitError


def test_second_row():
    c = np.array([1.0, 2, 3, 4])
    assert np.allclose(cl.dense_circulant(c)[1], [4, 1, 2, 3])


def test_identity():
    assert np.allclose(cl.dense_circulant([1, 0, 0, 0]), np.eye(4))


def test_negate_v0():
    D = cl.dense_circulant(np.array([4, 1, 0, 1]) / 6, cl.NEGATE_V0)
    assert np.allclose(np.diag(D), -4 / 6)
    assert np.allclose(D[0, 1:], np.array([1, 0, 1]) / 6)


def test_sign_trick_equality():
    c = np.array([0.4, 0.1, 0.3, 0.2])
    lhs = -c[0] * cl.shift_matrix(4, 0) + sum(c[j] * cl.shift_matrix(4, j) for j in range(1, 4))
    assert np.array_equal(lhs, cl.dense_circulant(c, cl.NEGATE_V0))


def test_eigenvalue_examples():
    assert np.allclose(cl.dft_eigenvalues([0.5, 0.5, 0, 0]), [1, (1 + 1j) / 2, 0, (1 - 1j) / 2])
    assert np.allclose(cl.dft_eigenvalues([5 / 8, 1 / 8, 1 / 8, 1 / 8]), [1, 0.5, 0.5, 0.5])


@given(st.integers(1, 5), st.integers(0, 2 ** 32))
def test_diagonalization(L, seed):
    r = np.random.default_rng(seed)
    N = 2 ** L
    c = r.normal(size=N) + 1j * r.normal(size=N)
    lam = cl.dft_eigenvalues(c)
    assert lam[0] == pytest.approx(c.sum())
    F = cl.fourier_matrix(N)
    assert np.max(np.abs(cl.dense_circulant(c) - F @ np.diag(lam) @ F.conj().T)) < 1e-10


def test_matfun_examples():
    e0 = np.eye(4)[0]
    assert np.allclose(cl.oracle_matfun([0.3, 0.2, 0.4, 0.1], "expm", e0, 0.0), e0)
    assert np.allclose(cl.oracle_matfun([0.5, 0.5, 0, 0], "matvec", e0), [0.5, 0, 0, 0.5])
    x = cl.oracle_matfun([5 / 8, 1 / 8, 1 / 8, 1 / 8], "inverse", e0)
    # componentwise check: C x = e0; this fixes the scale at 1/4, not 1/8
    assert np.allclose(cl.dense_circulant([5 / 8, 1 / 8, 1 / 8, 1 / 8]) @ x, e0)
    assert np.allclose(x, np.array([7, -1, -1, -1]) / 4)
    with pytest.raises(CircuitError):
        cl.oracle_matfun([0.5, 0.5, 0, 0], "inverse", e0)


@given(st.integers(1, 4), st.integers(0, 2 ** 32))
def test_matvec_cross_check(L, seed):
    r = np.random.default_rng(seed)
    c = r.random(2 ** L)
    psi = r.normal(size=2 ** L) + 1j * r.normal(size=2 ** L)
    for mode in (cl.PLAIN, cl.NEGATE_V0):
        assert np.max(np.abs(cl.oracle_matfun(c, "matvec", psi, sign_mode=mode)
                             - cl.dense_circulant(c, mode) @ psi)) < 1e-12


def test_convolution_examples():
    a = np.array([0.1, 0.2, 0.3, 0.4])
    assert np.allclose(cl.cyclic_convolution(a, [1, 0, 0, 0]), a)
    assert np.allclose(cl.cyclic_convolution([.5, .5, 0, 0], [.5, .5, 0, 0]), [.25, .5, .25, 0])
    with pytest.raises(CircuitError):
        cl.cyclic_convolution([1, 0], [1, 0, 0, 0])


@given(st.integers(1, 4), st.integers(0, 2 ** 32))
def test_convolution_properties(L, seed):
    r = np.random.default_rng(seed)
    a, b, c = (r.random(2 ** L) for _ in range(3))
    ab = cl.cyclic_convolution(a, b)
    assert np.max(np.abs(ab - cl.cyclic_convolution(b, a))) < 1e-12
    assert np.max(np.abs(cl.cyclic_convolution(ab, c)
                         - cl.cyclic_convolution(a, cl.cyclic_convolution(b, c)))) < 1e-12
    assert np.max(np.abs(cl.dense_circulant(a) @ cl.dense_circulant(b)
                         - cl.dense_circulant(ab))) < 1e-12
    lam = cl.dft_eigenvalues(a) * cl.dft_eigenvalues(b)
    assert np.max(np.abs(cl.dft_eigenvalues(ab) - lam)) < 1e-12


def test_condition_numbers():
    assert cl.condition_number([1, 0, 0, 0]) == 1
    assert cl.condition_number([5 / 8, 1 / 8, 1 / 8, 1 / 8]) == pytest.approx(2)
    assert cl.condition_number([0.5, 0.5, 0, 0]) == float("inf")


@given(st.integers(1, 5), st.integers(0, 2 ** 32))
def test_spectral_norm_of_normalized(L, seed):
    c = np.random.default_rng(seed).random(2 ** L)
    c /= c.sum()
    assert np.linalg.norm(cl.dense_circulant(c), 2) == pytest.approx(1, abs=1e-10)
    assert np.argmax(np.abs(cl.dft_eigenvalues(c))) == 0 or \
        np.max(np.abs(cl.dft_eigenvalues(c))) == pytest.approx(1, abs=1e-12)


def test_toeplitz_hankel_displays():
    assert np.allclose(cl.dense_toeplitz([0.3, 0.5, 0.2]), [[0.5, 0.3], [0.2, 0.5]])
    # stored h_{-1}, h_0, h_1
    assert np.allclose(cl.dense_hankel([0.3, 0.5, 0.2]), [[0.2, 0.5], [0.5, 0.3]])


def test_toeplitz_entries():
    t = np.arange(1.0, 8.0)  # t_{-3..3}
    T = cl.dense_toeplitz(t)
    H = cl.dense_hankel(t)
    for i in range(4):
        for k in range(4):
            assert T[i, k] == t[i - k + 3]
            assert H[i, k] == t[3 - i - k + 3]


def test_block_assemblies(rng):
    c = rng.random(4)
    blocks = [np.eye(2)] * 4
    assert np.allclose(cl.dense_block_ub(c, blocks), np.kron(cl.dense_circulant(c), np.eye(2)))
    w = rng.random((2, 4))
    D = cl.dense_block_cb(w)
    want = sum(w[j, k] * np.kron(cl.shift_matrix(2, j), cl.shift_matrix(4, k))
               for j in range(2) for k in range(4))
    assert np.allclose(D, want)


def test_embedding_blocks_zero_diagonal(rng):
    t = rng.random(7)
    T, B = cl.toeplitz_embedding_blocks(t)
    assert np.all(np.diag(B) == 0)
    assert np.allclose(T, cl.dense_toeplitz(t))
