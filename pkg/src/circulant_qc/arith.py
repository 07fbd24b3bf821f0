"""
Reversible register arithmetic: QFT, Fourier-basis (Draper) modular adders and
subtractors, and the all-bits flip.

Register-to-register subtraction ``|j>|k> -> |j>|(k - j) mod 2^L>`` is the
shift ``V_j`` applied under control of an index register; addition is its
inverse. Both are built as QFT (no swap layer) on the target, one controlled
phase per contributing (index bit, target bit) pair, and the inverse QFT, so a
single call costs 1.5 L^2 + 1.5 L one/two-qubit gates and needs no ancillas.

Every operation has a gate-level backend (circuit executed gate by gate,
optionally tallied) and a permutation-level backend (the same map applied to
basis labels directly).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CircuitError
from .sim import (H, SWAP, X, GateTally, StateVector, apply_gate, classify_gate,
                  map_register, phase_gate)


class Gate(NamedTuple):
    targets: tuple[int, ...]
    controls: tuple[int, ...]
    matrix: np.ndarray
    control_values: tuple[int, ...] | None = None

    def dagger(self) -> "Gate":
        return Gate(self.targets, self.controls, self.matrix.conj().T, self.control_values)


@dataclass
class ArithCircuit:
    """Ordered gate list over absolute qubit indices."""

    gates: list[Gate] = field(default_factory=list)
    description: str = ""

    def inverse(self) -> "ArithCircuit":
        return ArithCircuit([g.dagger() for g in reversed(self.gates)],
                            f"inverse({self.description})")

    def __add__(self, other: "ArithCircuit") -> "ArithCircuit":
        return ArithCircuit(self.gates + other.gates,
                            f"{self.description};{other.description}")

    def tally(self) -> GateTally:
        t = GateTally()
        for g in self.gates:
            t.add(classify_gate(len(g.targets), len(g.controls), g.matrix))
        return t

    def run(self, state: StateVector, tally: GateTally | None = None) -> StateVector:
        for g in self.gates:
            state = apply_gate(state, g.targets, g.controls, g.matrix, tally,
                               control_values=g.control_values)
        return state


def _require_power_of_two_width(L: int) -> None:
    if L < 1:
        raise CircuitError("register width must be at least 1")


def qft_circuit(qubits: Sequence[int], inverse: bool = False, swaps: bool = True) -> ArithCircuit:
    """F with F_kj = exp(2 pi i jk / 2^L) / sqrt(2^L) on ``qubits`` (LSB first).

    Without the swap layer the output register holds the Fourier label with
    its bits reversed.
    """
    qubits = list(qubits)
    L = len(qubits)
    _require_power_of_two_width(L)
    gates: list[Gate] = []
    for pos in range(L - 1, -1, -1):
        gates.append(Gate((qubits[pos],), (), H))
        for lower in range(pos - 1, -1, -1):
            angle = 2 * np.pi / 2 ** (pos - lower + 1)
            gates.append(Gate((qubits[pos],), (qubits[lower],), phase_gate(angle)))
    if swaps:
        for i in range(L // 2):
            gates.append(Gate((qubits[i], qubits[L - 1 - i]), (), SWAP))
    circ = ArithCircuit(gates, f"qft[{L}]")
    return circ.inverse() if inverse else circ


def _fourier_phase_stage(index_qubits: Sequence[int] | None, target_qubits: Sequence[int],
                         sign: int, constant: int | None = None) -> list[Gate]:
    """Phase kicks that add ``sign * j`` on a swap-free Fourier-encoded target.

    After the swap-free QFT, physical target qubit p carries Fourier bit
    L-1-p, so index bit a contributes angle 2 pi 2^(a - p - 1), which is
    trivial unless a <= p.
    """
    L = len(target_qubits)
    gates: list[Gate] = []
    for p in range(L):
        if constant is not None:
            angle = sum(2 * np.pi * sign * 2.0 ** (a - p - 1)
                        for a in range(p + 1) if (constant >> a) & 1)
            if not np.isclose(np.exp(1j * angle), 1.0, atol=1e-15):
                gates.append(Gate((target_qubits[p],), (), phase_gate(angle)))
            continue
        for a in range(min(p + 1, len(index_qubits))):
            angle = 2 * np.pi * sign * 2.0 ** (a - p - 1)
            gates.append(Gate((target_qubits[p],), (index_qubits[a],), phase_gate(angle)))
    return gates


def adder_circuit(index_qubits: Sequence[int], target_qubits: Sequence[int],
                  sign: int = -1) -> ArithCircuit:
    """|j>|k> -> |j>|(k + sign*j) mod 2^L>; ``sign=-1`` is the subtractor."""
    if len(index_qubits) != len(target_qubits):
        raise CircuitError(
            f"index and target widths differ ({len(index_qubits)} vs {len(target_qubits)})")
    if set(index_qubits) & set(target_qubits):
        raise CircuitError("index and target registers overlap")
    _require_power_of_two_width(len(target_qubits))
    qft = qft_circuit(target_qubits, swaps=False)
    stage = ArithCircuit(_fourier_phase_stage(index_qubits, target_qubits, sign), "phases")
    name = "sub" if sign < 0 else "add"
    return ArithCircuit((qft + stage + qft.inverse()).gates, f"{name}[{len(target_qubits)}]")


def constant_adder_circuit(target_qubits: Sequence[int], value: int, sign: int = -1) -> ArithCircuit:
    """Same circuit with the index register replaced by compile-time phases."""
    _require_power_of_two_width(len(target_qubits))
    qft = qft_circuit(target_qubits, swaps=False)
    stage = ArithCircuit(_fourier_phase_stage(None, target_qubits, sign, constant=int(value)))
    return ArithCircuit((qft + stage + qft.inverse()).gates, f"const[{value}]")


def qft(state: StateVector, register: str | Sequence[str], inverse: bool = False,
        tally: GateTally | None = None) -> StateVector:
    return qft_circuit(state.layout.qubits(register), inverse).run(state, tally)


def _shift(state: StateVector, index_register, target_register, sign: int,
           tally: GateTally | None, backend: str) -> StateVector:
    iq = state.layout.qubits(index_register)
    tq = state.layout.qubits(target_register)
    if len(iq) != len(tq):
        raise CircuitError(f"index and target widths differ ({len(iq)} vs {len(tq)})")
    if backend == "gate":
        return adder_circuit(iq, tq, sign).run(state, tally)
    if backend != "perm":
        raise CircuitError(f"unknown backend {backend!r}")
    if tally is not None:
        tally.merge(adder_circuit(iq, tq, sign).tally())
    index_vals = state.register_values(index_register)
    return map_register(state, target_register, lambda k, idx: k + sign * index_vals[idx])


def controlled_subtract(state: StateVector, index_register, target_register,
                        tally: GateTally | None = None, backend: str = "perm") -> StateVector:
    """|j>|k> -> |j>|(k - j) mod 2^L>, i.e. select(V) over the index register."""
    return _shift(state, index_register, target_register, -1, tally, backend)


def controlled_add(state: StateVector, index_register, target_register,
                   tally: GateTally | None = None, backend: str = "perm") -> StateVector:
    """|j>|k> -> |j>|(k + j) mod 2^L>, the controlled V_j^dagger."""
    return _shift(state, index_register, target_register, +1, tally, backend)


def subtract_constant(state: StateVector, register, value: int, tally: GateTally | None = None,
                      backend: str = "perm", sign: int = -1) -> StateVector:
    """V_value on ``register`` (or V_value^dagger with ``sign=+1``)."""
    q = state.layout.qubits(register)
    if backend == "gate":
        return constant_adder_circuit(q, value, sign).run(state, tally)
    if tally is not None:
        tally.merge(constant_adder_circuit(q, value, sign).tally())
    return map_register(state, register, lambda k, idx: k + sign * int(value))


def bitflip_all(state: StateVector, register, tally: GateTally | None = None,
                backend: str = "gate") -> StateVector:
    """|k> -> |2^L - 1 - k>, the permutation P = X^{(x)L}."""
    q = state.layout.qubits(register)
    if backend == "perm":
        if tally is not None:
            tally.add("single", len(q))
        return map_register(state, register, lambda k, idx: (2 ** len(q) - 1) - k)
    for qubit in q:
        state = apply_gate(state, [qubit], [], X, tally)
    return state


@dataclass
class ScalingTable:
    rows: list[tuple[int, GateTally]]
    exponent: float

    def as_dict(self) -> dict:
        return {"rows": [{"L": L, **t.as_dict()} for L, t in self.rows],
                "fitted_exponent": self.exponent}


def fit_exponent(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Least-squares slope of log(y) against log(x)."""
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def adder_gate_scaling(L_range: Sequence[int]) -> ScalingTable:
    """Tally one controlled subtractor per width and fit total ~ L^p."""
    rows = []
    for L in L_range:
        circ = adder_circuit(list(range(L)), list(range(L, 2 * L)), sign=-1)
        rows.append((int(L), circ.tally()))
    exp = fit_exponent([L for L, _ in rows], [t.total for _, t in rows]) if len(rows) > 1 else float("nan")
    return ScalingTable(rows, exp)
