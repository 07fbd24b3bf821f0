import numpy as np
import pytest
from hypothesis import given, strategies as st

from circulant_qc.errors import CircuitError, PostSelectionError, ResourceError
from circulant_qc.sim import (H, MAX_QUBITS, X, GateTally, RegisterLayout, StateVector,
                              apply_gate, apply_operator, branch_amplitudes, measure_sample,
                              project_register, random_state, ry, state_distance)

from conftest import basis, random_unitary


def test_x_on_qubit0_is_lsb():
    s = apply_gate(basis(2, 0), [0], [], X)
    assert s.amplitudes[1] == 1


def test_hadamard_on_zero():
    s = apply_gate(basis(1, 0), [0], [], H)
    assert np.allclose(s.amplitudes, [2 ** -0.5, 2 ** -0.5])


def test_random_circuit_preserves_norm(rng):
    s = random_state(5, rng)
    tally = GateTally()
    for _ in range(50):
        qs = [int(q) for q in rng.choice(5, size=2, replace=False)]
        if rng.random() < 0.5:
            s = apply_gate(s, qs, [], random_unitary(rng, 4), tally)
        else:
            s = apply_gate(s, qs[:1], qs[1:], random_unitary(rng, 2), tally)
    assert abs(s.norm() - 1) < 1e-12
    assert tally.total == 50


def test_long_circuit_norm(rng):
    s = random_state(4, rng)
    gates = [(int(rng.integers(4)), random_unitary(rng, 2)) for _ in range(10_000)]
    for q, U in gates:
        s = apply_gate(s, [q], [], U)
    assert abs(s.norm() - 1) < 1e-12


def test_gate_then_inverse(rng):
    s = random_state(3, rng)
    U = random_unitary(rng, 4)
    back = apply_gate(apply_gate(s, [0, 2], [1], U), [0, 2], [1], U.conj().T)
    assert state_distance(s, back, "exact") < 1e-12


def test_apply_gate_errors(rng):
    s = random_state(2, rng)
    with pytest.raises(CircuitError):
        apply_gate(s, [0], [], np.array([[1, 1], [0, 1]]))
    with pytest.raises(CircuitError):
        apply_gate(s, [0], [0], X)
    with pytest.raises(CircuitError):
        apply_gate(s, [2], [], X)


def test_tally_rejects_three_qubit_gates(rng):
    s = random_state(3, rng)
    with pytest.raises(CircuitError):
        apply_gate(s, [0, 1], [2], random_unitary(rng, 4), GateTally())


def test_tally_additive():
    a, b = GateTally(), GateTally()
    a.add("single", 3)
    b.add("cphase", 2)
    b.add("two_qubit")
    c = a + b
    assert c.total == 6 == sum(v for k, v in c.as_dict().items() if k != "total")


def test_project_half():
    layout = RegisterLayout.of(("a", 1), ("q", 1))
    amps = np.zeros(4, dtype=complex)
    amps[0b00] = amps[0b11] = 2 ** -0.5  # (|0>|a=0> + |1>|a=1>)/sqrt2
    s, p = project_register(StateVector(amps, layout), "q", 0)
    assert p == pytest.approx(0.5)
    assert s.norm_tracked == pytest.approx(0.5)
    assert np.allclose(s.amplitudes, [1, 0, 0, 0])


def test_project_impossible():
    with pytest.raises(PostSelectionError, match="post-selection impossible"):
        project_register(basis(1, 1), "sys", 0)


def test_projection_probability_direct_sum(rng):
    layout = RegisterLayout.of(("a", 2), ("b", 2))
    s = random_state(layout, rng)
    for v in range(4):
        _, p = project_register(s, "b", v)
        block, _ = branch_amplitudes(s, {"b": v})
        assert p == pytest.approx(float(np.sum(np.abs(block) ** 2)), abs=1e-14)


def test_sampling():
    assert measure_sample(basis(1, 1), "sys", 3)[0] == 1
    plus = apply_gate(basis(1, 0), [0], [], H)
    outs = [measure_sample(plus, "sys", seed)[0] for seed in range(10_000)]
    assert 0.47 <= outs.count(0) / 1e4 <= 0.53
    assert measure_sample(plus, "sys", 11)[0] == measure_sample(plus, "sys", 11)[0]


def test_sample_collapses():
    plus = apply_gate(basis(1, 0), [0], [], H)
    out, s = measure_sample(plus, "sys", 5)
    assert abs(s.amplitudes[out]) == pytest.approx(1)


def test_distances(rng):
    a = random_state(3, rng)
    assert state_distance(a, a) == 0
    assert state_distance(a, a.replace(a.amplitudes * np.exp(1j * np.pi / 3))) < 1e-7
    assert state_distance(basis(1, 0), basis(1, 1), "exact") == pytest.approx(np.sqrt(2))
    with pytest.raises(CircuitError):
        state_distance(basis(1, 0), basis(2, 0))


def test_resource_cap():
    with pytest.raises(ResourceError):
        StateVector.zeros(RegisterLayout.of(("big", MAX_QUBITS + 1)))


def test_layout_contiguous():
    layout = RegisterLayout.of(("a", 2), ("b", 3)).extend(("c", 1))
    assert layout.qubits("b") == [2, 3, 4]
    assert layout.qubits(["c", "a"]) == [5, 0, 1]
    assert layout.num_qubits == 6


def test_apply_operator_tracks_norm():
    s = apply_gate(basis(1, 0), [0], [], H)
    out = apply_operator(s, [0], np.diag([1.0, 0.0]))
    assert out.norm_tracked == pytest.approx(0.5)
    assert np.allclose(out.amplitudes, [1, 0])


@given(st.floats(-np.pi, np.pi), st.integers(0, 2))
def test_ry_roundtrip(theta, q):
    s = StateVector.basis(RegisterLayout.of(("r", 3)), r=5)
    back = apply_gate(apply_gate(s, [q], [], ry(theta)), [q], [], ry(-theta))
    assert state_distance(s, back, "exact") < 1e-12
