"""
Truncated-Taylor simulation of e^{-iCt} for Hermitian circulants.

The evolution is cut into r = ceil(t / ln 2) segments. Each segment is the
LCU of the order-K Taylor polynomial of e^{-iC t/r}: a unary register k
selects the order, K index registers each hold sqrt(c_j), controlled
subtractors apply V_j1 ... V_jk, and one -i phase per unary qubit supplies
(-i)^k. One oblivious amplitude amplification step then lifts the 1/s
success amplitude to (almost) one.

OAA is exact only for s = 2, which needs a segment time of exactly ln 2. When
t/r < ln 2 the Hamiltonian is padded with a multiple of the identity,
C' = (C + beta I) / (1 + beta), so that C' r ln 2 = (C + beta I) t. This only
changes the global phase of the result.

Two segment backends share the plan:

* ``dense`` simulates the whole ancilla bank (K unary qubits plus K index
  registers) gate by gate and runs the literal OAA sequence. It needs
  L + K L + K qubits.
* ``contracted`` never materializes the bank. The ancilla-zero block of one
  segment is M = sum_k a_k^2 (-i)^k C'^k, with a_k read from the simulated
  unary preparation and each C' application executed by the circulant LCU
  circuit on (index, system). The OAA output is then assembled from the
  exact identity  -Pi A R A^dag R A Pi = 3M - 4 M M^dag M.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import ceil, factorial, log

import numpy as np

from . import classical
from .arith import adder_circuit, controlled_add, controlled_subtract
from .circulant import CirculantSpec, circulant_pipeline
from .classical import NEGATE_V0, PLAIN
from .errors import CircuitError, ResourceError
from .lcu import LcuPipeline, UnitaryFamily, oaa_step, reflect_zero
from .oracles import AmplitudeOracle, probability_oracle, unary_oracle
from .sim import (MAX_QUBITS, GateTally, RegisterLayout, StateVector, apply_gate,
                  classify_gate, register_values, state_distance)

LN2 = log(2.0)
HERMITIAN_ATOL = 1e-12
BACKENDS = ("contracted", "dense")


def tail_bound(K: int) -> float:
    """2 (ln 2)^{K+1} / (K+1)!, an upper bound on sum_{k>K} (ln 2)^k / k!."""
    return 2 * LN2 ** (K + 1) / factorial(K + 1)


def taylor_tail(x: float, K: int, terms: int = 60) -> float:
    return float(sum(x ** k / factorial(k) for k in range(K + 1, K + 1 + terms)))


@dataclass(frozen=True)
class HamSimPlan:
    t: float
    epsilon: float
    r: int
    K: int
    s: float
    # identity padding that brings the segment time to exactly ln 2
    beta: float = 0.0
    backend: str = "contracted"

    @property
    def segment_time(self) -> float:
        return self.t / self.r if self.r else 0.0

    @property
    def ratio(self) -> float:
        """Taylor ratio of the padded segment (ln 2 whenever r > 0)."""
        return self.segment_time * (1 + self.beta)

    @property
    def s_nominal(self) -> float:
        """sum_{k<=K} (t/r)^k / k! of the unpadded segment."""
        x = self.segment_time
        return float(sum(x ** k / factorial(k) for k in range(self.K + 1)))

    @property
    def tail(self) -> float:
        return tail_bound(self.K)

    def with_order(self, K: int) -> "HamSimPlan":
        return replace(self, K=int(K), s=_normalization(self.ratio, int(K)))

    def qubits(self, L: int) -> int:
        """Width of the register bank the dense backend simulates."""
        return L + self.K * L + self.K


def _normalization(x: float, K: int) -> float:
    return float(sum(x ** k / factorial(k) for k in range(K + 1)))


def plan_simulation(t: float, epsilon: float, L: int | None = None,
                    backend: str = "contracted", K: int | None = None) -> HamSimPlan:
    if not t > 0:
        raise CircuitError(f"evolution time must be positive, got {t}")
    if not epsilon > 0:
        raise CircuitError(f"epsilon must be positive, got {epsilon}")
    if backend not in BACKENDS:
        raise CircuitError(f"unknown ham-sim backend {backend!r}")
    r = ceil(t / LN2 - 1e-12)
    if K is None:
        K = 1
        while tail_bound(K) > epsilon / r:
            K += 1
    beta = r * LN2 / t - 1.0
    plan = HamSimPlan(float(t), float(epsilon), r, int(K), _normalization(LN2, int(K)),
                      max(beta, 0.0), backend)
    if backend == "dense" and L is not None and plan.qubits(L) > MAX_QUBITS:
        raise ResourceError(f"dense segment needs {plan.qubits(L)} qubits "
                            f"(K={plan.K}, L={L}); cap is {MAX_QUBITS}")
    return plan


def check_hermitian(spec: CirculantSpec) -> None:
    D = spec.dense()
    if not np.allclose(D, D.conj().T, atol=HERMITIAN_ATOL, rtol=0):
        raise CircuitError("circulant is not Hermitian (need c_j = c_{N-j})")


def padded_spec(spec: CirculantSpec, beta: float) -> CirculantSpec:
    """(C + beta I)/(1 + beta) on the realized operator, keeping the sign mode."""
    c = spec.c.copy()
    c[0] += beta
    return CirculantSpec(c / (1 + beta), spec.sign_mode, spec.scale)


# segment ingredients ------------------------------------------------------------

@dataclass(frozen=True)
class SegmentParts:
    spec: CirculantSpec  # padded
    unary: AmplitudeOracle
    index_oracle: AmplitudeOracle
    coefficients: np.ndarray  # a_k^2 (-i)^k, k = 0..K
    K: int


def _unary_phase(K: int) -> np.ndarray:
    """Diagonal phases of the K single-qubit -i gates, read per unary value k."""
    layout = RegisterLayout.of(("u", K))
    out = np.empty(K + 1, dtype=complex)
    for k in range(K + 1):
        st = StateVector.basis(layout, u=(1 << k) - 1)
        for q in range(K):
            st = apply_gate(st, [q], [], MINUS_I)
        out[k] = st.amplitudes[(1 << k) - 1]
    return out


MINUS_I = np.diag([1.0, -1j])


def segment_parts(spec: CirculantSpec, plan: HamSimPlan) -> SegmentParts:
    padded = padded_spec(spec, plan.beta)
    unary = unary_oracle(plan.K, plan.ratio)
    prepared = unary.apply(StateVector.zeros(RegisterLayout.of(("u", plan.K))), "u") \
        if plan.K else None
    amps = np.array([prepared.amplitudes[(1 << k) - 1] if plan.K else 1.0
                     for k in range(plan.K + 1)])
    coeffs = amps * _unary_phase(plan.K) * amps
    return SegmentParts(padded, unary, probability_oracle(padded.c), coeffs, plan.K)


def _circulant_block(parts: SegmentParts, amps: np.ndarray, layout: RegisterLayout,
                     adjoint: bool, tally: GateTally | None) -> np.ndarray:
    """Ancilla-zero block of the circulant LCU (or its inverse) on ``amps``."""
    pipeline = circulant_pipeline(parts.spec, layout, layout.names)
    state = StateVector(amps, layout)
    full = pipeline.apply(pipeline.embed(state), inverse=adjoint, tally=tally)
    out, _ = pipeline.postselect(full)
    return out


def _taylor_block(parts: SegmentParts, amps: np.ndarray, layout: RegisterLayout,
                  adjoint: bool, tally: GateTally | None) -> np.ndarray:
    """M (or M^dag) applied to ``amps``; M = sum_k a_k^2 (-i)^k C'^k."""
    coeffs = parts.coefficients.conj() if adjoint else parts.coefficients
    total = coeffs[0] * amps
    power = amps
    for k in range(1, parts.K + 1):
        power = _circulant_block(parts, power, layout, adjoint, tally)
        total = total + coeffs[k] * power
    return total


def _oaa_block(parts: SegmentParts, amps: np.ndarray, layout: RegisterLayout) -> np.ndarray:
    """3 M psi - 4 M M^dag M psi."""
    m = _taylor_block(parts, amps, layout, False, None)
    mdm = _taylor_block(parts, _taylor_block(parts, m, layout, True, None), layout, False, None)
    return 3 * m - 4 * mdm


def segment_operator(spec: CirculantSpec, plan: HamSimPlan) -> np.ndarray:
    """Matrix of one post-selected (unnormalized) OAA segment, column by column.

    Approximates exp(-i (C + beta I) t / r).
    """
    check_hermitian(spec)
    parts = segment_parts(spec, plan)
    layout = RegisterLayout.of(("sys", spec.L))
    N = spec.N
    cols = [_oaa_block(parts, np.eye(N, dtype=complex)[:, k], layout) for k in range(N)]
    return np.stack(cols, axis=1)


class SegmentFamily(UnitaryFamily):
    """select(W): subtract idx_i from the system, -i on every unary qubit.

    With ``negate_v0`` the index-zero reflection is conditioned on the unary
    qubit so that unused (all-zero) index registers stay the identity.
    """

    def __init__(self, K: int, system: list[str], sign_mode: str, backend: str):
        self.K = K
        self.system = system
        self.sign_mode = sign_mode
        self.backend = backend
        self.index_registers = tuple(f"idx{i}" for i in range(K)) + ("unary",)
        self.system_registers = tuple(system)

    def apply(self, state, *, inverse=False, tally=None):
        uq = state.layout.qubits("unary")
        steps = range(self.K - 1, -1, -1) if inverse else range(self.K)
        if inverse:
            for q in uq:
                state = apply_gate(state, [q], [], MINUS_I.conj(), tally)
        for i in steps:
            idx = f"idx{i}"
            active = ((register_values(state.layout, "unary") >> i) & 1) == 1
            if inverse and self.sign_mode == NEGATE_V0:
                state = reflect_zero(state, idx, active)
            if inverse:
                state = controlled_add(state, idx, self.system, tally, self.backend)
            else:
                state = controlled_subtract(state, idx, self.system, tally, self.backend)
            if not inverse and self.sign_mode == NEGATE_V0:
                state = reflect_zero(state, idx, active)
        if not inverse:
            for q in uq:
                state = apply_gate(state, [q], [], MINUS_I, tally)
        return state


@dataclass(frozen=True)
class _SegmentPrep:
    """R_ini on the unary register, then O_c on idx_i controlled by unary qubit i."""

    parts: SegmentParts
    L: int

    @property
    def ancillas(self):
        K = self.parts.K
        return tuple((f"idx{i}", self.L) for i in range(K)) + (("unary", K),)

    def apply(self, state: StateVector, inverse: bool = False) -> StateVector:
        uq = state.layout.qubits("unary")
        K = self.parts.K
        if not inverse:
            state = self.parts.unary.apply(state, "unary")
            for i in range(K):
                state = self.parts.index_oracle.apply(state, f"idx{i}", controls=[uq[i]])
            return state
        for i in range(K - 1, -1, -1):
            state = self.parts.index_oracle.apply(state, f"idx{i}", inverse=True,
                                                  controls=[uq[i]])
        return self.parts.unary.apply(state, "unary", inverse=True)


def segment_pipeline(spec: CirculantSpec, system_layout: RegisterLayout, plan: HamSimPlan,
                     backend: str = "perm") -> LcuPipeline:
    parts = segment_parts(spec, plan)
    L = system_layout.num_qubits
    family = SegmentFamily(plan.K, system_layout.names, spec.sign_mode, backend)
    return LcuPipeline(_SegmentPrep(parts, L), family, system_layout)


def segment_tally(L: int, K: int, unary: AmplitudeOracle) -> GateTally:
    """One constructed segment circuit A: R_ini and its inverse, K subtractors,
    K phase gates. Controlled-O_c calls are counted separately."""
    t = GateTally()
    for g in unary.ops:
        t.add(classify_gate(len(g.targets), len(g.controls), g.matrix), 2)
    if K:
        t.merge(adder_circuit(list(range(L)), list(range(L, 2 * L))).tally(), K)
    t.add("single", K)
    return t


# segments and evolution --------------------------------------------------------

def _check_inputs(spec: CirculantSpec, psi: StateVector) -> None:
    check_hermitian(spec)
    if psi.num_qubits != spec.L:
        raise CircuitError(f"state has {psi.num_qubits} qubits, spec has L={spec.L}")


def apply_segment(spec: CirculantSpec, psi: StateVector, plan: HamSimPlan,
                  backend: str | None = None, tally: GateTally | None = None,
                  info: dict | None = None, arith_backend: str = "perm") -> StateVector:
    """One segment e^{-iCt/r} (up to global phase) followed by post-selection.

    The returned state is normalized; ``info`` receives the residual ancilla
    weight after OAA and the call counts of this segment.
    """
    _check_inputs(spec, psi)
    backend = backend or plan.backend
    if plan.r == 0:
        raise CircuitError("zero-time plan has no segments")
    info = {} if info is None else info
    if backend == "dense":
        if plan.qubits(spec.L) > MAX_QUBITS:
            raise ResourceError(f"dense segment needs {plan.qubits(spec.L)} qubits")
        pipeline = segment_pipeline(spec, psi.layout, plan, arith_backend)
        res = oaa_step(pipeline, psi, plan.s, tol=max(1e-3, plan.tail), tally=tally)
        out_amps = res.unnormalized
    elif backend == "contracted":
        parts = segment_parts(spec, plan)
        layout = psi.layout
        out_amps = _oaa_block(parts, psi.amplitudes, layout)
        if tally is not None:
            # executed circuit: A, A^dag, A of the segment
            tally.merge(segment_tally(spec.L, plan.K, parts.unary), 3)
    else:
        raise CircuitError(f"unknown ham-sim backend {backend!r}")
    weight = float(np.vdot(out_amps, out_amps).real)
    if weight < 1e-14:
        raise CircuitError("segment output vanished")
    info["residual_weight"] = 1.0 - weight
    info["output_norm"] = float(np.sqrt(weight))
    info["controlled_oc_calls"] = 2 * plan.K
    info["executed_controlled_oc_calls"] = 6 * plan.K
    return StateVector(out_amps / np.sqrt(weight), psi.layout, psi.norm_tracked * weight)


@dataclass
class EvolutionDiagnostics:
    plan: HamSimPlan | None
    segment_errors: list[float] = field(default_factory=list)
    residual_weights: list[float] = field(default_factory=list)
    controlled_oc_calls: int = 0
    executed_controlled_oc_calls: int = 0
    tally: GateTally = field(default_factory=GateTally)
    distance: float = 0.0

    def as_dict(self) -> dict:
        p = self.plan
        return {
            "plan": None if p is None else {
                "t": p.t, "epsilon": p.epsilon, "r": p.r, "K": p.K, "s": p.s,
                "s_nominal": p.s_nominal, "padding_beta": p.beta, "tail_bound": p.tail,
                "backend": p.backend},
            "segment_errors": list(self.segment_errors),
            "residual_weights": list(self.residual_weights),
            "controlled_oc_calls": self.controlled_oc_calls,
            "executed_controlled_oc_calls": self.executed_controlled_oc_calls,
            "gates": self.tally.as_dict(),
            "distance": self.distance,
        }


def evolution_oracle(spec: CirculantSpec, psi: StateVector, t: float) -> np.ndarray:
    return classical.oracle_matfun(spec.c, "expm", psi.amplitudes, t, spec.sign_mode)


def simulate_evolution(spec: CirculantSpec, psi: StateVector, t: float, epsilon: float,
                       backend: str = "contracted", plan: HamSimPlan | None = None,
                       arith_backend: str = "perm") -> tuple[StateVector, EvolutionDiagnostics]:
    """r chained segments approximating e^{-iCt}|psi> within epsilon (up to phase)."""
    _check_inputs(spec, psi)
    if t == 0:
        return psi, EvolutionDiagnostics(None)
    if plan is None:
        plan = plan_simulation(t, epsilon, spec.L, backend)
    diag = EvolutionDiagnostics(plan)
    seg_tally = segment_tally(spec.L, plan.K, unary_oracle(plan.K, plan.ratio) if plan.K
                              else AmplitudeOracle(0, np.ones(1)))
    state = psi
    dt = plan.segment_time
    for _ in range(plan.r):
        info: dict = {}
        ideal = classical.oracle_matfun(spec.c, "expm", state.amplitudes, dt, spec.sign_mode)
        state = apply_segment(spec, state, plan, backend, None, info, arith_backend)
        diag.segment_errors.append(state_distance(state.amplitudes, ideal))
        diag.residual_weights.append(info["residual_weight"])
        diag.controlled_oc_calls += info["controlled_oc_calls"]
        diag.executed_controlled_oc_calls += info["executed_controlled_oc_calls"]
    # constructed circuit: r segments, each one A; executed: three A per segment
    diag.tally = GateTally().merge(seg_tally, plan.r)
    diag.distance = state_distance(state.amplitudes, evolution_oracle(spec, psi, t))
    return state, diag
