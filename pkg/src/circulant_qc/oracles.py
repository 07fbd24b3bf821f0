"""
Amplitude-loading oracles.

``build_oracle`` realizes O|0^L> = sum_k a_k |k> exactly with a binary tree of
uniformly controlled Y rotations (most significant qubit first) followed by
one controlled phase layer on qubit 0 when the amplitudes are complex. The
cost is O(2^L) gates; pipelines count an oracle application as one call.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Sequence

import numpy as np

from .arith import Gate
from .errors import CircuitError
from .sim import StateVector, apply_gate, ry


@dataclass(frozen=True)
class AmplitudeOracle:
    width: int
    amplitudes: np.ndarray
    # gates on register-relative qubit indices
    ops: tuple[Gate, ...] = field(repr=False, default=())

    def bind(self, state: StateVector, registers: str | Sequence[str]) -> list[int]:
        qubits = state.layout.qubits(registers)
        if len(qubits) != self.width:
            raise CircuitError(
                f"oracle width {self.width} does not match register width {len(qubits)}")
        return qubits

    def apply(self, state: StateVector, registers: str | Sequence[str], inverse: bool = False,
              controls: Sequence[int] = ()) -> StateVector:
        qubits = self.bind(state, registers)
        controls = list(controls)
        if set(controls) & set(qubits):
            raise CircuitError("control qubit lies inside the oracle register")
        ops = [g.dagger() for g in reversed(self.ops)] if inverse else list(self.ops)
        for g in ops:
            cv = list(g.control_values) if g.control_values is not None else [1] * len(g.controls)
            state = apply_gate(state, [qubits[t] for t in g.targets],
                               [qubits[c] for c in g.controls] + controls, g.matrix,
                               control_values=cv + [1] * len(controls))
        return state


def _validate_amplitudes(amplitudes) -> tuple[np.ndarray, int]:
    a = np.asarray(amplitudes, dtype=complex).ravel()
    if a.size == 0:
        raise CircuitError("oracle amplitudes are empty")
    L = int(round(np.log2(a.size)))
    if 2 ** L != a.size:
        raise CircuitError(f"oracle length {a.size} is not a power of two")
    norm2 = float(np.sum(np.abs(a) ** 2))
    if abs(norm2 - 1.0) > 1e-10:
        raise CircuitError(f"oracle amplitudes are not normalized (sum |a|^2 = {norm2:.12g})")
    return a, L


def _bits(value: int, n: int) -> tuple[int, ...]:
    return tuple((value >> i) & 1 for i in range(n))


def build_oracle(amplitudes) -> AmplitudeOracle:
    a, L = _validate_amplitudes(amplitudes)
    mass = np.abs(a) ** 2
    ops: list[Gate] = []
    for q in range(L - 1, -1, -1):
        n_hi = L - 1 - q
        for prefix in range(2 ** n_hi):
            block = mass[prefix << (q + 1):(prefix + 1) << (q + 1)]
            total = block.sum()
            if total <= 0:
                continue  # zero-mass subtree: nothing to load
            upper = block[2 ** q:].sum()
            if upper <= 0:
                continue
            theta = 2 * np.arcsin(np.sqrt(min(upper / total, 1.0)))
            controls = tuple(range(q + 1, L))
            ops.append(Gate((q,), controls, ry(theta), _bits(prefix, n_hi)))
    phases = np.where(mass > 0, np.angle(a), 0.0)
    if L >= 1 and np.any(np.abs(phases) > 1e-15):
        for prefix in range(2 ** (L - 1)):
            p0, p1 = phases[2 * prefix], phases[2 * prefix + 1]
            if abs(p0) < 1e-15 and abs(p1) < 1e-15:
                continue
            ops.append(Gate((0,), tuple(range(1, L)),
                            np.diag([np.exp(1j * p0), np.exp(1j * p1)]),
                            _bits(prefix, L - 1)))
    return AmplitudeOracle(L, a, tuple(ops))


def probability_oracle(weights) -> AmplitudeOracle:
    """O_c for a nonnegative probability vector: loads sqrt(c_j)."""
    c = np.asarray(weights, dtype=float).ravel()
    if np.any(c < 0):
        raise CircuitError("O_c weights must be nonnegative")
    return build_oracle(np.sqrt(c))


def apply_controlled_oracle(state: StateVector, control: int, oracle: AmplitudeOracle,
                            register: str | Sequence[str]) -> StateVector:
    """|0><0| (x) I + |1><1| (x) O."""
    return oracle.apply(state, register, controls=[control])


def unary_weights(K: int, ratio: float) -> np.ndarray:
    """Normalized amplitudes over |1^k 0^{K-k}>, proportional to sqrt(ratio^k / k!)."""
    w = np.array([ratio ** k / factorial(k) for k in range(K + 1)])
    amps = np.zeros(2 ** K)
    for k in range(K + 1):
        amps[(1 << k) - 1] = np.sqrt(w[k] / w.sum())
    return amps


def unary_oracle(K: int, ratio: float) -> AmplitudeOracle:
    """R_ini as a chain: qubit 0 rotated freely, qubit i conditioned on qubit i-1.

    Unary value k sets qubits 0..k-1, i.e. basis index 2^k - 1.
    """
    if K < 0:
        raise CircuitError("unary register width must be nonnegative")
    if not 0 < ratio <= np.log(2) + 1e-9:
        raise CircuitError(f"ratio {ratio} outside (0, ln 2]")
    w = np.array([ratio ** k / factorial(k) for k in range(K + 1)])
    tail = np.cumsum(w[::-1])[::-1]  # tail[i] = sum_{k >= i} w_k
    ops: list[Gate] = []
    for i in range(K):
        cond = tail[i + 1] / tail[i]
        theta = 2 * np.arcsin(np.sqrt(min(cond, 1.0)))
        ops.append(Gate((i,), (i - 1,) if i else (), ry(theta), (1,) if i else None))
    return AmplitudeOracle(K, unary_weights(K, ratio), tuple(ops))


def prepare_unary_weights(state: StateVector, register: str, ratio: float) -> StateVector:
    K = state.layout.width(register)
    return unary_oracle(K, ratio).apply(state, register)
