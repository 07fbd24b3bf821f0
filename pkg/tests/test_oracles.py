import numpy as np
import pytest
from hypothesis import given, strategies as st

from circulant_qc.errors import CircuitError
from circulant_qc.oracles import (apply_controlled_oracle, build_oracle, prepare_unary_weights,
                                  probability_oracle, unary_oracle, unary_weights)
from circulant_qc.sim import RegisterLayout, StateVector, random_state, state_distance

from conftest import random_vector


def zeros(L, name="r"):
    return StateVector.zeros(RegisterLayout.of((name, L)))


def test_basis_oracle_is_identity_on_zero():
    o = build_oracle([1, 0, 0, 0])
    assert np.allclose(o.apply(zeros(2), "r").amplitudes, [1, 0, 0, 0])


def test_two_term():
    o = build_oracle([2 ** -0.5, 2 ** -0.5, 0, 0])
    assert np.allclose(o.apply(zeros(2), "r").amplitudes, [2 ** -0.5, 2 ** -0.5, 0, 0])


def test_random_16(rng):
    a = random_vector(rng, 16)
    assert np.max(np.abs(build_oracle(a).apply(zeros(4), "r").amplitudes - a)) < 1e-12


@given(st.integers(1, 5), st.integers(0, 2 ** 32))
def test_oracle_roundtrip(L, seed):
    r = np.random.default_rng(seed)
    a = random_vector(r, 2 ** L)
    a[r.random(2 ** L) < 0.3] = 0
    if not np.any(a):
        a[0] = 1
    a = a / np.linalg.norm(a)
    o = build_oracle(a)
    assert np.max(np.abs(o.apply(zeros(L), "r").amplitudes - a)) < 1e-12
    s = random_state(RegisterLayout.of(("r", L)), r)
    back = o.apply(o.apply(s, "r"), "r", inverse=True)
    assert state_distance(s, back, "exact") < 1e-12


@given(st.integers(1, 4), st.integers(0, 2 ** 32))
def test_probability_roundtrip(L, seed):
    c = np.random.default_rng(seed).random(2 ** L)
    c /= c.sum()
    out = probability_oracle(c).apply(zeros(L), "r").amplitudes
    assert np.max(np.abs(np.abs(out) ** 2 - c)) < 1e-12


def test_validation():
    with pytest.raises(CircuitError):
        build_oracle([])
    with pytest.raises(CircuitError):
        build_oracle([1, 0, 0])
    with pytest.raises(CircuitError):
        build_oracle([1, 1])
    with pytest.raises(CircuitError):
        probability_oracle([1.5, -0.5])


def test_controlled_oracle():
    c = np.array([0.1, 0.2, 0.3, 0.4])
    o = probability_oracle(c)
    layout = RegisterLayout.of(("r", 2), ("ctl", 1))
    off = apply_controlled_oracle(StateVector.zeros(layout), 2, o, "r")
    assert np.allclose(off.amplitudes, StateVector.zeros(layout).amplitudes)
    on = apply_controlled_oracle(StateVector.basis(layout, ctl=1), 2, o, "r")
    assert np.allclose(on.amplitudes[4:], np.sqrt(c))
    plus = StateVector(np.where(np.arange(8) % 4 == 0, 2 ** -0.5, 0), layout)
    out = apply_controlled_oracle(plus, 2, o, "r")
    want = np.concatenate([[2 ** -0.5, 0, 0, 0], np.sqrt(c) / np.sqrt(2)])
    assert np.allclose(out.amplitudes, want, atol=1e-12)
    with pytest.raises(CircuitError):
        apply_controlled_oracle(plus, 0, o, "r")


def test_unary_small_ratio():
    s = prepare_unary_weights(zeros(3, "u"), "u", 1e-14)
    assert abs(s.amplitudes[0]) == pytest.approx(1, abs=1e-7)


def test_unary_ln2():
    x = np.log(2)
    s = prepare_unary_weights(zeros(3, "u"), "u", x)
    want = np.sqrt([1, x, x ** 2 / 2, x ** 3 / 6])
    want /= np.linalg.norm(want)
    got = s.amplitudes[[0, 1, 3, 7]]
    assert np.max(np.abs(got - want)) < 1e-12


@given(st.integers(1, 8), st.floats(1e-6, np.log(2)))
def test_unary_span_and_norm(K, ratio):
    s = unary_oracle(K, ratio).apply(zeros(K, "u"), "u")
    valid = [(1 << k) - 1 for k in range(K + 1)]
    invalid = np.delete(np.abs(s.amplitudes) ** 2, valid)
    assert invalid.sum() < 1e-12
    assert abs(np.sum(np.abs(s.amplitudes) ** 2) - 1) < 1e-12
    assert np.max(np.abs(s.amplitudes - unary_weights(K, ratio))) < 1e-12


def test_unary_ratio_out_of_range():
    with pytest.raises(CircuitError):
        unary_oracle(3, 0.8)
    with pytest.raises(CircuitError):
        unary_oracle(3, 0.0)


def test_unary_chain_structure():
    o = unary_oracle(4, 0.5)
    assert len(o.ops) == 4
    assert o.ops[0].controls == ()
    assert [g.controls for g in o.ops[1:]] == [(0,), (1,), (2,)]
