"""
Linear combination of unitaries.

A pipeline is ``A = (P^dag (x) I) select(W) (P (x) I)`` where ``P`` prepares
``sum_j sqrt(alpha_j) |j>|Phi_j>`` on ancilla registers. On the all-zero
ancilla branch A acts as ``M = sum_j alpha_j W_j``; post-selecting that branch
realizes M probabilistically, amplitude amplification boosts the branch, and
for (nearly) unitary M one oblivious step does so without re-preparing the
input.

System registers always sit on the low qubits, ancillas above them, so the
post-selected output is the leading block of the full amplitude vector.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import arith
from .classical import NEGATE_V0, PLAIN
from .errors import CircuitError, PostSelectionError
from .oracles import AmplitudeOracle
from .sim import (POSTSELECT_FLOOR, GateTally, RegisterLayout, StateVector,
                  apply_gate, branch_amplitudes, register_values)


# unitary families ---------------------------------------------------------

class UnitaryFamily:
    """Indexed family {W_j} applied as select(W) = sum_j |j><j| (x) W_j."""

    index_registers: tuple[str, ...] = ()
    system_registers: tuple[str, ...] = ()
    garbage_registers: tuple[str, ...] = ()

    def apply(self, state: StateVector, *, inverse: bool = False,
              tally: GateTally | None = None) -> StateVector:
        raise NotImplementedError


def reflect_zero(state: StateVector, register: str | Sequence[str],
                 control_mask: np.ndarray | None = None) -> StateVector:
    """I - 2|0><0| on ``register`` (optionally only where ``control_mask``)."""
    hit = register_values(state.layout, register) == 0
    if control_mask is not None:
        hit &= control_mask
    return state.replace(np.where(hit, -state.amplitudes, state.amplitudes))


@dataclass(frozen=True)
class ShiftFamily(UnitaryFamily):
    """W_j = V_j on ``target``; ``negate_v0`` follows select(V) with the
    reflection I - 2|0><0| on the index so that W_0 = -V_0."""

    index: str | tuple[str, ...]
    target: str | tuple[str, ...]
    sign_mode: str = PLAIN
    backend: str = "perm"

    @property
    def index_registers(self):
        return (self.index,) if isinstance(self.index, str) else tuple(self.index)

    @property
    def system_registers(self):
        return (self.target,) if isinstance(self.target, str) else tuple(self.target)

    def apply(self, state, *, inverse=False, tally=None):
        if self.sign_mode not in (PLAIN, NEGATE_V0):
            raise CircuitError(f"unknown sign mode {self.sign_mode!r}")
        idx = list(self.index_registers)
        tgt = list(self.system_registers)
        if inverse and self.sign_mode == NEGATE_V0:
            state = reflect_zero(state, idx)
        if inverse:
            state = arith.controlled_add(state, idx, tgt, tally, self.backend)
        else:
            state = arith.controlled_subtract(state, idx, tgt, tally, self.backend)
        if not inverse and self.sign_mode == NEGATE_V0:
            state = reflect_zero(state, idx)
        return state


@dataclass(frozen=True)
class ExplicitFamily(UnitaryFamily):
    """W_j given as explicit matrices on ``system`` (applied index-controlled)."""

    index: str
    system: str | tuple[str, ...]
    unitaries: tuple[np.ndarray, ...]

    @property
    def index_registers(self):
        return (self.index,)

    @property
    def system_registers(self):
        return (self.system,) if isinstance(self.system, str) else tuple(self.system)

    def apply(self, state, *, inverse=False, tally=None):
        iq = state.layout.qubits(self.index)
        sq = state.layout.qubits(list(self.system_registers))
        present = np.unique(state.register_values(self.index)[np.abs(state.amplitudes) > 0])
        for j in present:
            if j >= len(self.unitaries):
                raise CircuitError(f"no unitary defined for index value {j}")
            U = np.asarray(self.unitaries[j], dtype=complex)
            if inverse:
                U = U.conj().T
            cv = [(int(j) >> b) & 1 for b in range(len(iq))]
            state = apply_gate(state, sq, iq, U, control_values=cv)
        return state


@dataclass(frozen=True)
class IndexPhaseFamily(UnitaryFamily):
    """Scalar blocks U_j = exp(i theta j): one phase gate per index bit."""

    index: str
    theta: float

    @property
    def index_registers(self):
        return (self.index,)

    def apply(self, state, *, inverse=False, tally=None):
        sgn = -1 if inverse else 1
        for b, q in enumerate(state.layout.qubits(self.index)):
            angle = sgn * self.theta * 2 ** b
            state = apply_gate(state, [q], [], np.diag([1, np.exp(1j * angle)]), tally)
        return state


@dataclass(frozen=True)
class ComposedFamily(UnitaryFamily):
    """Several families sharing index registers, applied in sequence."""

    parts: tuple[UnitaryFamily, ...]
    garbage: tuple[str, ...] = ()

    @property
    def index_registers(self):
        out: list[str] = []
        for p in self.parts:
            out += [r for r in p.index_registers if r not in out]
        return tuple(out)

    @property
    def system_registers(self):
        out: list[str] = []
        for p in self.parts:
            out += [r for r in p.system_registers if r not in out]
        return tuple(out)

    @property
    def garbage_registers(self):
        return self.garbage

    def apply(self, state, *, inverse=False, tally=None):
        parts = reversed(self.parts) if inverse else self.parts
        for p in parts:
            state = p.apply(state, inverse=inverse, tally=tally)
        return state


def select_apply(state: StateVector, family: UnitaryFamily,
                 tally: GateTally | None = None) -> StateVector:
    return family.apply(state, tally=tally)


# preparation oracles ---------------------------------------------------------

@dataclass(frozen=True)
class BoundOracle:
    """An AmplitudeOracle bound to ancilla registers (concatenated low-to-high)."""

    oracle: AmplitudeOracle
    registers: tuple[tuple[str, int], ...]

    @property
    def ancillas(self) -> tuple[tuple[str, int], ...]:
        return self.registers

    def apply(self, state: StateVector, inverse: bool = False) -> StateVector:
        return self.oracle.apply(state, [n for n, _ in self.registers], inverse=inverse)


def bind_oracle(oracle: AmplitudeOracle, registers: Sequence[tuple[str, int]]) -> BoundOracle:
    return BoundOracle(oracle, tuple((n, int(w)) for n, w in registers))


# pipeline ---------------------------------------------------------------------

@dataclass
class LcuResult:
    output: StateVector
    success_probability: float
    tally: GateTally = field(default_factory=GateTally)
    scale: float = 1.0
    calls: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def unnormalized(self) -> np.ndarray:
        """Post-selected branch before renormalization, i.e. M|psi>."""
        return self.output.amplitudes * np.sqrt(self.success_probability)

    def operator_output(self) -> np.ndarray:
        """Un-normalized action of the original (unscaled) operator."""
        return self.scale * self.unnormalized


@dataclass(frozen=True)
class LcuPipeline:
    prep: object  # anything with .ancillas and .apply(state, inverse)
    family: UnitaryFamily
    system_layout: RegisterLayout
    # registers (in addition to all ancillas) that must read 0 on success
    flags: tuple[str, ...] = ()

    @property
    def ancillas(self) -> tuple[tuple[str, int], ...]:
        return tuple(self.prep.ancillas)

    def embed(self, psi: StateVector) -> StateVector:
        if psi.layout != self.system_layout:
            raise CircuitError("input state layout does not match the pipeline")
        return psi.with_registers(*self.ancillas)

    def apply(self, state: StateVector, inverse: bool = False,
              tally: GateTally | None = None) -> StateVector:
        state = self.prep.apply(state)
        state = self.family.apply(state, inverse=inverse, tally=tally)
        return self.prep.apply(state, inverse=True)

    def success_mask(self, layout: RegisterLayout) -> np.ndarray:
        mask = np.ones(2 ** layout.num_qubits, dtype=bool)
        for name in [n for n, _ in self.ancillas] + list(self.flags):
            mask &= register_values(layout, name) == 0
        return mask

    def reflect_success(self, state: StateVector) -> StateVector:
        """2 Pi - I where Pi projects on the success branch."""
        mask = self.success_mask(state.layout)
        return state.replace(np.where(mask, state.amplitudes, -state.amplitudes))

    def postselect(self, state: StateVector) -> tuple[np.ndarray, RegisterLayout]:
        fixed = {n: 0 for n, _ in self.ancillas}
        fixed.update({f: 0 for f in self.flags})
        return branch_amplitudes(state, fixed)


def _result_from(pipeline: LcuPipeline, full: StateVector, tally: GateTally,
                 calls: dict, diagnostics: dict | None = None) -> LcuResult:
    amps, layout = pipeline.postselect(full)
    p = float(np.vdot(amps, amps).real)
    if p < POSTSELECT_FLOOR:
        raise PostSelectionError("post-selection impossible: operator annihilates the input")
    out = StateVector(amps / np.sqrt(p), layout, full.norm_tracked * p)
    return LcuResult(out, p, tally, calls=calls, diagnostics=diagnostics or {})


def make_pipeline(psi_layout: RegisterLayout, alpha_oracle, family: UnitaryFamily,
                  index_widths: Sequence[tuple[str, int]] | None = None,
                  flags: Sequence[str] = ()) -> LcuPipeline:
    """Bind a bare AmplitudeOracle to the family's index registers, or accept
    an object that already carries its ancilla registers (product oracles)."""
    if isinstance(alpha_oracle, AmplitudeOracle):
        if index_widths is None:
            raise CircuitError("index register widths required for a bare oracle")
        prep = bind_oracle(alpha_oracle, index_widths)
    else:
        prep = alpha_oracle
    return LcuPipeline(prep, family, psi_layout, tuple(flags))


def lcu_sandwich(psi: StateVector, alpha_oracle, family: UnitaryFamily,
                 index_widths: Sequence[tuple[str, int]] | None = None,
                 flags: Sequence[str] = (), tally: GateTally | None = None) -> LcuResult:
    """Run A on |0^m>|psi> and post-select the ancillas on 0."""
    if index_widths is None and isinstance(alpha_oracle, AmplitudeOracle):
        index_widths = [(family.index_registers[0], alpha_oracle.width)] \
            if len(family.index_registers) == 1 else None
    pipeline = make_pipeline(psi.layout, alpha_oracle, family, index_widths, flags)
    return run_pipeline(pipeline, psi, tally)


def run_pipeline(pipeline: LcuPipeline, psi: StateVector,
                 tally: GateTally | None = None) -> LcuResult:
    tally = GateTally() if tally is None else tally
    full = pipeline.apply(pipeline.embed(psi), tally=tally)
    return _result_from(pipeline, full, tally, {"alpha_oracle": 2})


def amplitude_amplify(pipeline: LcuPipeline, psi_oracle: AmplitudeOracle,
                      iterations: int, tally: GateTally | None = None) -> LcuResult:
    """Standard amplitude amplification of the success branch.

    With script-A = A (I (x) O_psi), each round is
    -script-A S_0 script-A^dag S_good, where S_good flips the success branch and
    S_0 flips the all-zero state. Success probability after n rounds is
    sin^2((2n+1) theta) with sin(theta) = ||M psi||.
    """
    if iterations < 0:
        raise CircuitError("iterations must be nonnegative")
    tally = GateTally() if tally is None else tally
    sys_names = [n for n in pipeline.system_layout.names if n not in pipeline.flags]
    full_layout = pipeline.system_layout.extend(*pipeline.ancillas)
    start = StateVector.zeros(full_layout)

    def script_a(s: StateVector, inverse: bool = False) -> StateVector:
        if inverse:
            s = pipeline.apply(s, inverse=True, tally=tally)
            return psi_oracle.apply(s, sys_names, inverse=True)
        s = psi_oracle.apply(s, sys_names)
        return pipeline.apply(s, tally=tally)

    state = script_a(start)
    amps0, _ = pipeline.postselect(state)
    p0 = float(np.vdot(amps0, amps0).real)
    if p0 < POSTSELECT_FLOOR:
        raise PostSelectionError("amplitude amplification undefined: zero initial success amplitude")
    good = pipeline.success_mask(full_layout)
    for _ in range(iterations):
        state = state.replace(np.where(good, -state.amplitudes, state.amplitudes))
        state = script_a(state, inverse=True)
        amps = state.amplitudes.copy()
        amps[0] = -amps[0]
        state = state.replace(-amps)
        state = script_a(state)
    theta = float(np.arcsin(min(np.sqrt(p0), 1.0)))
    calls = {"alpha_oracle": 2 * (2 * iterations + 1), "psi_oracle": 2 * iterations + 1}
    return _result_from(pipeline, state, tally, calls,
                        {"theta": theta, "initial_probability": p0, "iterations": iterations})


def oaa_step(pipeline: LcuPipeline, psi: StateVector, s: float, tol: float = 1e-3,
             tally: GateTally | None = None) -> LcuResult:
    """One oblivious amplitude amplification step: -A R A^dag R A, R = 2 Pi - I.

    Requires A|0>|psi> = (1/s)|0>U|psi> + |perp> with s close to 2; no
    preparation of psi is used. The returned probability is the ancilla-zero
    weight after the step.
    """
    if abs(s - 2.0) > tol:
        raise CircuitError(f"normalization s = {s:.6g} is not within {tol} of 2")
    tally = GateTally() if tally is None else tally
    state = pipeline.embed(psi)
    state = pipeline.apply(state, tally=tally)
    state = pipeline.reflect_success(state)
    state = pipeline.apply(state, inverse=True, tally=tally)
    state = pipeline.reflect_success(state)
    state = pipeline.apply(state, tally=tally)
    state = state.replace(-state.amplitudes)
    res = _result_from(pipeline, state, tally, {"alpha_oracle": 6})
    res.diagnostics["residual_weight"] = 1.0 - res.success_probability
    return res
