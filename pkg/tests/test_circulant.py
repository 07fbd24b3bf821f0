import numpy as np
import pytest
from hypothesis import given, strategies as st

from circulant_qc import classical as cl
from circulant_qc.circulant import (BlockSpec, CirculantSpec, HankelSpec, ToeplitzSpec,
                                    apply_block_cb, apply_block_ub, apply_circulant,
                                    apply_hankel, apply_toeplitz, embed_toeplitz)
from circulant_qc.errors import CircuitError, PostSelectionError
from circulant_qc.oracles import build_oracle
from circulant_qc.sim import RegisterLayout, StateVector, random_state

from conftest import basis, random_unitary


def _state(L, rng):
    return random_state(RegisterLayout.of(("sys", L)), rng)


def _simplex(rng, n):
    c = rng.random(n)
    return c / c.sum()


# plain circulants ---------------------------------------------------------------

def test_identity_spec(rng):
    psi = _state(2, rng)
    res = apply_circulant(CirculantSpec(np.array([1.0, 0, 0, 0])), psi)
    assert res.success_probability == pytest.approx(1)
    assert np.allclose(res.output.amplitudes, psi.amplitudes)


def test_two_term_example():
    res = apply_circulant(CirculantSpec(np.array([0.5, 0.5, 0, 0])), basis(2, 0))
    assert res.success_probability == pytest.approx(0.5)
    assert np.allclose(res.output.amplitudes, [2 ** -0.5, 0, 0, 2 ** -0.5])


@pytest.mark.parametrize("L", [1, 2, 3])
def test_exhaustive_basis_inputs(L, rng):
    for _ in range(3):
        spec = CirculantSpec(_simplex(rng, 2 ** L))
        D = spec.dense()
        for k in range(2 ** L):
            res = apply_circulant(spec, basis(L, k))
            assert np.max(np.abs(res.unnormalized - D[:, k])) < 1e-10


@given(st.integers(1, 6), st.integers(0, 2 ** 32), st.sampled_from(["plain", "negate_v0"]))
def test_random_matches_dense(L, seed, mode):
    r = np.random.default_rng(seed)
    spec = CirculantSpec(_simplex(r, 2 ** L), mode)
    psi = _state(L, r)
    want = spec.dense() @ psi.amplitudes
    if np.linalg.norm(want) < 1e-6:
        return
    res = apply_circulant(spec, psi)
    assert np.max(np.abs(res.unnormalized - want)) < 1e-10


@given(st.integers(1, 5), st.integers(0, 2 ** 32))
def test_probability_identity(L, seed):
    r = np.random.default_rng(seed)
    c = _simplex(r, 2 ** L)
    psi = _state(L, r)
    F = cl.fourier_matrix(2 ** L)
    lam = cl.dft_eigenvalues(c)
    phi = F.conj().T @ psi.amplitudes
    p = apply_circulant(CirculantSpec(c), psi).success_probability
    assert p == pytest.approx(np.sum(np.abs(lam * phi) ** 2), abs=1e-10)
    kappa = cl.condition_number(c)
    assert p >= 1 / kappa ** 2 - 1e-10


def test_condition_bound_example(rng):
    c = _simplex(rng, 8)
    p = apply_circulant(CirculantSpec(c), _state(3, rng)).success_probability
    assert p >= 1 / cl.condition_number(c) ** 2


@given(st.integers(0, 2 ** 32))
def test_extreme_case_bound(seed):
    # c = (1/2, 1/2) has Lambda = (1, 0): the only case with |Lambda_k| = 1 off N/2
    r = np.random.default_rng(seed)
    psi = _state(1, r)
    phi = cl.fourier_matrix(2).conj().T @ psi.amplitudes
    if abs(phi[1]) ** 2 > 1 - 1e-6:
        return
    p = apply_circulant(CirculantSpec(np.array([0.5, 0.5])), psi).success_probability
    assert p >= 1 - abs(phi[1]) ** 2 - 1e-10


def test_annihilated_input_raises():
    psi = StateVector(np.array([1, -1]) / np.sqrt(2), RegisterLayout.of(("sys", 1)))
    with pytest.raises(PostSelectionError):
        apply_circulant(CirculantSpec(np.array([0.5, 0.5])), psi)


def test_width_mismatch():
    with pytest.raises(CircuitError):
        apply_circulant(CirculantSpec(np.array([0.5, 0.5])), basis(2, 0))


def test_amplify_needs_oracle():
    with pytest.raises(CircuitError):
        apply_circulant(CirculantSpec(np.full(4, 0.25)), basis(2, 0), amplify=1)


def test_amplify_uniform():
    res = apply_circulant(CirculantSpec(np.full(4, 0.25)), basis(2, 0), amplify=1,
                          psi_oracle=build_oracle([1, 0, 0, 0]))
    assert res.success_probability == pytest.approx(1, abs=1e-10)


def test_spec_validation():
    with pytest.raises(CircuitError):
        CirculantSpec(np.array([0.5, 0.6]))
    with pytest.raises(CircuitError):
        CirculantSpec(np.array([1.5, -0.5]))
    with pytest.raises(CircuitError):
        CirculantSpec(np.array([0.5, 0.25, 0.25]))
    spec = CirculantSpec.from_raw([4, 1, 0, 1])
    assert spec.scale == pytest.approx(6)
    assert np.allclose(spec.c * spec.scale, [4, 1, 0, 1])


def test_scale_recovers_raw_operator(rng):
    raw = np.array([3.0, 1, 0, 2])
    psi = _state(2, rng)
    res = apply_circulant(CirculantSpec.from_raw(raw), psi)
    assert np.allclose(res.operator_output(), cl.dense_circulant(raw) @ psi.amplitudes)


# Toeplitz / Hankel -----------------------------------------------------------

def test_embedding_example():
    c = embed_toeplitz(ToeplitzSpec(np.array([0.3, 0.5, 0.2]))).c
    assert np.allclose(c, [0.5, 0.3, 0, 0.2])


@given(st.integers(1, 4), st.integers(0, 2 ** 32))
def test_embedding_block_form(L, seed):
    r = np.random.default_rng(seed)
    N = 2 ** L
    t = _simplex(r, 2 * N - 1)
    c = embed_toeplitz(ToeplitzSpec(t)).c
    assert c[N] == 0
    T, B = cl.toeplitz_embedding_blocks(t)
    assert np.allclose(cl.dense_circulant(c), np.block([[T, B], [B, T]]), atol=0, rtol=0)


def test_embedding_symmetric(rng):
    half = rng.random(4)
    t = np.concatenate([half[:0:-1], half])
    t /= t.sum()
    D = cl.dense_circulant(embed_toeplitz(ToeplitzSpec(t)).c)
    assert np.allclose(D, D.T)


def test_toeplitz_identity(rng):
    t = np.zeros(7)
    t[3] = 1
    psi = _state(2, rng)
    res = apply_toeplitz(ToeplitzSpec(t), psi)
    assert res.success_probability == pytest.approx(1)
    assert np.allclose(res.output.amplitudes, psi.amplitudes)


def test_toeplitz_worked_example():
    res = apply_toeplitz(ToeplitzSpec(np.array([0.3, 0.5, 0.2])), basis(1, 0))
    assert res.success_probability == pytest.approx(0.29, abs=1e-12)
    assert np.allclose(res.unnormalized, [0.5, 0.2])


def test_hankel_worked_example():
    res = apply_hankel(HankelSpec(np.array([0.3, 0.5, 0.2])), basis(1, 0))
    assert res.success_probability == pytest.approx(0.29, abs=1e-12)
    assert np.allclose(res.unnormalized, [0.2, 0.5])


@given(st.integers(1, 5), st.integers(0, 2 ** 32))
def test_toeplitz_hankel_match_dense(L, seed):
    r = np.random.default_rng(seed)
    t = _simplex(r, 2 ** (L + 1) - 1)
    psi = _state(L, r)
    for spec, apply in ((ToeplitzSpec(t), apply_toeplitz), (HankelSpec(t), apply_hankel)):
        want = spec.dense() @ psi.amplitudes
        res = apply(spec, psi)
        assert np.max(np.abs(res.unnormalized - want)) < 1e-10
        assert res.success_probability == pytest.approx(np.vdot(want, want).real, abs=1e-10)


def test_hankel_symmetric_matches_tp(rng):
    half = rng.random(4)
    h = np.concatenate([half[:0:-1], half])
    h /= h.sum()
    P = np.eye(4)[::-1]
    assert np.allclose(HankelSpec(h).dense(), ToeplitzSpec(h).dense() @ P)


def test_hankel_applied_twice(rng):
    # with h = reversed t: H = T P, so two applications give T P T P = T T^T, checked densely
    t = _simplex(rng, 7)
    h = t[::-1].copy()
    psi = _state(2, rng)
    spec = HankelSpec(h)
    first = apply_hankel(spec, psi)
    second = apply_hankel(spec, first.output)
    got = second.unnormalized * np.sqrt(first.success_probability)
    H = spec.dense()
    T = ToeplitzSpec(t).dense()
    assert np.allclose(H, T @ np.eye(4)[::-1])
    assert np.max(np.abs(got - H @ H @ psi.amplitudes)) < 1e-10
    assert np.allclose(H @ H, T @ T.T)


def test_toeplitz_amplified():
    spec = ToeplitzSpec(np.array([0.3, 0.5, 0.2]))
    base = apply_toeplitz(spec, basis(1, 0))
    amp = apply_toeplitz(spec, basis(1, 0), amplify=1, psi_oracle=build_oracle([1, 0]))
    theta = np.arcsin(np.sqrt(base.success_probability))
    assert amp.success_probability == pytest.approx(np.sin(3 * theta) ** 2, abs=1e-10)
    assert np.allclose(amp.output.amplitudes * np.sign(amp.output.amplitudes[0].real),
                       base.output.amplitudes)


def test_hankel_amplified():
    spec = HankelSpec(np.array([0.3, 0.5, 0.2]))
    base = apply_hankel(spec, basis(1, 0))
    amp = apply_hankel(spec, basis(1, 0), amplify=1, psi_oracle=build_oracle([1, 0]))
    assert abs(np.vdot(amp.output.amplitudes, base.output.amplitudes)) == pytest.approx(1)


# block circulants ---------------------------------------------------------------

def _block_state(rng, n):
    return random_state(RegisterLayout.of(("sys", n)), rng)


def test_ub_identity_blocks(rng):
    c = _simplex(rng, 4)
    psi = _block_state(rng, 3)
    res = apply_block_ub(BlockSpec.ub(c, [np.eye(2)] * 4), psi)
    want = np.kron(cl.dense_circulant(c), np.eye(2)) @ psi.amplitudes
    assert np.max(np.abs(res.unnormalized - want)) < 1e-10


def test_ub_phase_pi():
    spec = BlockSpec.ub_phase([0.5, 0.5, 0, 0], np.pi)
    res = apply_block_ub(spec, basis(2, 0))
    assert res.success_probability == pytest.approx(0.5)
    assert np.allclose(res.output.amplitudes, [2 ** -0.5, 0, 0, -2 ** -0.5])


@given(st.integers(1, 3), st.integers(0, 2 ** 32))
def test_ub_phase_pi_alternating(L, seed):
    r = np.random.default_rng(seed)
    c = _simplex(r, 2 ** L)
    signed = c * (-1) ** np.arange(2 ** L)
    D = BlockSpec.ub_phase(c, np.pi).dense()
    assert np.allclose(D, cl.dense_circulant(signed), atol=1e-15)
    psi = _state(L, r)
    want = cl.dense_circulant(signed) @ psi.amplitudes
    if np.linalg.norm(want) < 1e-6:
        return
    res = apply_block_ub(BlockSpec.ub_phase(c, np.pi), psi)
    assert np.max(np.abs(res.unnormalized - want)) < 1e-10


@given(st.integers(0, 2 ** 32))
def test_ub_random_blocks(seed):
    r = np.random.default_rng(seed)
    c = _simplex(r, 4)
    blocks = [random_unitary(r, 2) for _ in range(4)]
    spec = BlockSpec.ub(c, blocks)
    psi = _block_state(r, 3)
    want = spec.dense() @ psi.amplitudes
    assert np.allclose(spec.dense(), sum(c[j] * np.kron(cl.shift_matrix(4, j), blocks[j])
                                         for j in range(4)))
    res = apply_block_ub(spec, psi)
    assert np.max(np.abs(res.unnormalized - want)) < 1e-10


def test_ub_rejects_nonunitary():
    with pytest.raises(CircuitError):
        BlockSpec.ub([0.5, 0.5], [np.eye(2), 2 * np.eye(2)])


def test_ub_width_mismatch():
    spec = BlockSpec.ub([0.5, 0.5], [np.eye(2), np.eye(2)])
    with pytest.raises(CircuitError):
        apply_block_ub(spec, basis(1, 0))


def test_cb_identity():
    w = np.zeros((2, 2))
    w[0, 0] = 1
    res = apply_block_cb(BlockSpec.cb(w), basis(2, 2))
    assert res.success_probability == pytest.approx(1)
    assert res.output.amplitudes[2] == pytest.approx(1)


def test_cb_uniform():
    res = apply_block_cb(BlockSpec.cb(np.full((2, 2), 0.25)), basis(2, 0))
    assert res.success_probability == pytest.approx(0.25)
    assert np.allclose(res.output.amplitudes, 0.5)


@given(st.integers(0, 2 ** 32))
def test_cb_random(seed):
    r = np.random.default_rng(seed)
    w = r.random((4, 4))
    w /= w.sum()
    spec = BlockSpec.cb(w)
    psi = _block_state(r, 4)
    want = sum(w[j, k] * np.kron(cl.shift_matrix(4, j), cl.shift_matrix(4, k))
               for j in range(4) for k in range(4)) @ psi.amplitudes
    res = apply_block_cb(spec, psi)
    assert np.max(np.abs(res.unnormalized - want)) < 1e-10


def test_cb_rectangular(rng):
    w = rng.random((2, 4))
    spec = BlockSpec.cb(w)
    psi = _block_state(rng, 3)
    res = apply_block_cb(spec, psi)
    assert np.max(np.abs(res.operator_output() - cl.dense_block_cb(w) @ psi.amplitudes)) < 1e-10


def test_cb_validation():
    with pytest.raises(CircuitError):
        BlockSpec.cb(np.array([[0.5, -0.5], [0.5, 0.5]]))
    with pytest.raises(CircuitError):
        BlockSpec("cb", weights=np.full((3, 2), 1 / 6))
