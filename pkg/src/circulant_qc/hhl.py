"""
Circulant linear systems by phase estimation and eigenvalue inversion.

Phase estimation runs on U = exp(i pi C), i.e. half-scaled phases: an
eigenvalue lambda in (0, 1] appears as phase lambda/2 in (0, 1/2], so a
register value m reads as lambda~ = 2m / 2^T and lambda = 1 never wraps to 0.
A flag qubit is rotated to (1/(kappa lambda~))|1> + ...; after uncomputing
the phase register, the flag = 1, phase = 0 branch holds C^{-1}|psi> / kappa.

Backends for the controlled powers U^{2^b}:

* ``exact_diagonal``: F diag(exp(i pi 2^b Lambda)) F^dag as one controlled gate.
* ``taylor``: the post-selected truncated-Taylor segment matrix raised to the
  segment count, applied as a (slightly non-unitary) controlled operator.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, log2

import numpy as np

from . import classical
from .arith import qft
from .circulant import CirculantSpec
from .errors import CircuitError, PostSelectionError
from .hamsim import check_hermitian, plan_simulation, segment_operator
from .lcu import LcuResult
from .oracles import AmplitudeOracle
from .sim import (POSTSELECT_FLOOR, H, GateTally, RegisterLayout, StateVector,
                  apply_gate, apply_operator, branch_amplitudes, phase_gate,
                  register_values, ry)

BACKENDS = ("exact_diagonal", "taylor")
POSITIVE_FLOOR = 1e-12


@dataclass(frozen=True)
class InversionPlan:
    T: int
    kappa: float
    backend: str = "exact_diagonal"
    epsilon: float = 1e-3
    # invert the negated realized operator (for specs realizing -A)
    negate: bool = False

    def __post_init__(self):
        if self.T < 1:
            raise CircuitError("phase register needs at least one qubit")
        if not self.kappa >= 1:
            raise CircuitError(f"kappa must be >= 1, got {self.kappa}")
        if self.backend not in BACKENDS:
            raise CircuitError(f"unknown inversion backend {self.backend!r}")


def min_phase_bits(kappa: float, epsilon: float) -> int:
    return int(ceil(log2(kappa / epsilon))) + 2


def target_eigenvalues(spec: CirculantSpec, negate: bool = False) -> np.ndarray:
    lam = classical.dft_eigenvalues(spec.c, spec.sign_mode)
    return -lam if negate else lam


def plan_inversion(spec: CirculantSpec, epsilon: float, kappa: float | None = None,
                   backend: str = "exact_diagonal", T: int | None = None,
                   negate: bool = False) -> InversionPlan:
    """Default kappa is 1/min Lambda, which also bounds the rotation amplitude by 1."""
    lam = _checked_spectrum(spec, negate)
    if kappa is None:
        kappa = max(1.0, 1.0 / float(lam.min()))
    if T is None:
        T = min_phase_bits(kappa, epsilon) + 1
    return InversionPlan(int(T), float(kappa), backend, float(epsilon), negate)


def _checked_spectrum(spec: CirculantSpec, negate: bool) -> np.ndarray:
    check_hermitian(spec)
    lam = target_eigenvalues(spec, negate)
    if np.max(np.abs(lam.imag)) > 1e-10:
        raise CircuitError("spectrum is not real")
    lam = lam.real
    if lam.min() <= POSITIVE_FLOOR:
        raise CircuitError(
            f"nonpositive eigenvalue {lam.min():.3g}: inversion needs a positive spectrum "
            "(condition number finite, all Lambda_k in (0, 1])")
    if lam.max() > 1 + 1e-10:
        raise CircuitError(f"eigenvalue {lam.max():.6g} exceeds 1; normalize the circulant parameters")
    return lam


def _layout(L: int, T: int) -> RegisterLayout:
    return RegisterLayout.of(("sys", L), ("phase", T), ("flag", 1))


def _controlled_powers(spec: CirculantSpec, plan: InversionPlan, inverse: bool):
    """Yield (bit, apply) for every controlled U^{2^b} (or its adjoint)."""
    N = spec.N
    sgn = -1.0 if plan.negate else 1.0
    if plan.backend == "exact_diagonal":
        lam = target_eigenvalues(spec, plan.negate).real
        F = classical.fourier_matrix(N)
        for b in range(plan.T):
            phases = np.exp(1j * np.pi * 2 ** b * lam * (-1 if inverse else 1))
            yield b, ("gate", F @ np.diag(phases) @ F.conj().T, None)
        return
    # taylor: exp(-i C' ln2)^r ~ exp(-i beta tau) exp(-i C tau), tau = pi 2^b
    eps_seg = plan.epsilon / (2 * plan.T)
    for b in range(plan.T):
        tau = np.pi * 2 ** b
        hs = plan_simulation(tau, eps_seg)
        W = np.linalg.matrix_power(segment_operator(spec, hs), hs.r)
        fix = hs.beta * tau  # W^r ~ exp(-i fix) exp(-i C tau)
        if sgn > 0:
            # exp(+i C tau) = exp(-i fix) (W^r)^dag
            M, ctrl_phase = W.conj().T, -fix
        else:
            # exp(-i C tau) = exp(+i fix) W^r
            M, ctrl_phase = W, fix
        if inverse:
            M, ctrl_phase = M.conj().T, -ctrl_phase
        yield b, ("operator", M, ctrl_phase)


def _apply_powers(state: StateVector, spec: CirculantSpec, plan: InversionPlan,
                  inverse: bool, tally: GateTally | None, cache: dict) -> StateVector:
    key = ("powers", inverse)
    if key not in cache:
        cache[key] = list(_controlled_powers(spec, plan, inverse))
    sq = state.layout.qubits("sys")
    pq = state.layout.qubits("phase")
    items = cache[key]
    for b, (kind, M, ctrl_phase) in (reversed(items) if inverse else items):
        if kind == "gate":
            state = apply_gate(state, sq, [pq[b]], M)
        else:
            state = apply_operator(state, sq, M, controls=[pq[b]])
            state = apply_gate(state, [pq[b]], [], phase_gate(ctrl_phase), tally)
    return state


def _phase_estimation(state: StateVector, spec, plan, inverse: bool, tally, cache) -> StateVector:
    pq = state.layout.qubits("phase")
    if not inverse:
        for q in pq:
            state = apply_gate(state, [q], [], H, tally)
        state = _apply_powers(state, spec, plan, False, tally, cache)
        return qft(state, "phase", inverse=True, tally=tally)
    state = qft(state, "phase", inverse=False, tally=tally)
    state = _apply_powers(state, spec, plan, True, tally, cache)
    for q in pq:
        state = apply_gate(state, [q], [], H, tally)
    return state


def phase_estimate(spec: CirculantSpec, psi: StateVector, plan: InversionPlan,
                   tally: GateTally | None = None) -> StateVector:
    """sum_j b_j |u_j>|lambda_j/2 estimate> on (sys, phase); flag qubit left at 0."""
    _checked_spectrum(spec, plan.negate)
    if psi.num_qubits != spec.L:
        raise CircuitError(f"state has {psi.num_qubits} qubits, spec has L={spec.L}")
    state = StateVector(psi.amplitudes, RegisterLayout.of(("sys", spec.L)))
    state = state.with_registers(("phase", plan.T), ("flag", 1))
    return _phase_estimation(state, spec, plan, False, tally, {})


def rotation_amplitudes(plan: InversionPlan) -> tuple[np.ndarray, np.ndarray]:
    """Flag |1> amplitude per register value and a mask of clamped values."""
    M = 2 ** plan.T
    m = np.arange(M)
    lam = 2.0 * m / M
    amp = np.zeros(M)
    nz = m > 0
    raw = 1.0 / (plan.kappa * lam[nz])
    amp[nz] = np.minimum(1.0, raw)
    clamped = np.zeros(M, dtype=bool)
    clamped[nz] = raw > 1.0
    return amp, clamped


def _rotate(state: StateVector, plan: InversionPlan, inverse: bool) -> StateVector:
    """Uniformly controlled Ry on the flag: angle 2 arcsin(amp[m]) for phase value m.

    lambda~ = 0 gets angle 0 (left in |0>, projected out later).
    """
    amp, _ = rotation_amplitudes(plan)
    theta = 2 * np.arcsin(amp)
    if inverse:
        theta = -theta
    layout = state.layout
    m = register_values(layout, "phase")
    flag = register_values(layout, "flag")
    fbit = 1 << layout["flag"].offset
    a = state.amplitudes
    partner = a[np.arange(a.size) ^ fbit]
    cos, sin = np.cos(theta[m] / 2), np.sin(theta[m] / 2)
    # Ry: |0> -> cos|0> + sin|1>, |1> -> -sin|0> + cos|1>
    new = np.where(flag == 0, cos * a - sin * partner, sin * partner + cos * a)
    return state.replace(new)


def invert_circulant(spec: CirculantSpec, psi: StateVector, plan: InversionPlan,
                     tally: GateTally | None = None, amplify: int | None = None,
                     psi_oracle: AmplitudeOracle | None = None) -> LcuResult:
    """C^{-1}|psi> / ||C^{-1}|psi>|| on success (flag = 1, phase = 0).

    ``operator_output()`` of the result reconstructs C^{-1}|psi> for the
    unnormalized operator (scale included), up to the sign flip when
    ``plan.negate`` is set.
    """
    lam = _checked_spectrum(spec, plan.negate)
    if psi.num_qubits != spec.L:
        raise CircuitError(f"state has {psi.num_qubits} qubits, spec has L={spec.L}")
    tally = GateTally() if tally is None else tally
    layout = _layout(spec.L, plan.T)
    cache: dict = {}

    def forward(st: StateVector) -> StateVector:
        st = _phase_estimation(st, spec, plan, False, tally, cache)
        st = _rotate(st, plan, False)
        return _phase_estimation(st, spec, plan, True, tally, cache)

    def backward(st: StateVector) -> StateVector:
        st = _phase_estimation(st, spec, plan, False, tally, cache)
        st = _rotate(st, plan, True)
        return _phase_estimation(st, spec, plan, True, tally, cache)

    start = StateVector(psi.amplitudes, RegisterLayout.of(("sys", spec.L)))
    start = start.with_registers(("phase", plan.T), ("flag", 1))

    # diagnostics from the phase-estimated state before rotation
    pe = _phase_estimation(start, spec, plan, False, None, cache)
    phase_vals = register_values(pe.layout, "phase")
    probs = np.abs(pe.amplitudes) ** 2 * pe.norm_tracked
    zero_branch = float(probs[phase_vals == 0].sum())
    _, clamped_mask = rotation_amplitudes(plan)
    clamped = float(probs[clamped_mask[phase_vals]].sum())

    good = (register_values(layout, "flag") == 1) & (register_values(layout, "phase") == 0)
    iterations = int(amplify or 0)
    if iterations:
        if plan.backend != "exact_diagonal":
            raise CircuitError("amplitude amplification needs the unitary exact_diagonal backend")
        if psi_oracle is None:
            raise CircuitError("amplitude amplification needs the input-state oracle")
        zero = StateVector.zeros(layout)
        state = forward(psi_oracle.apply(zero, "sys"))
        for _ in range(iterations):
            state = state.replace(np.where(good, -state.amplitudes, state.amplitudes))
            state = psi_oracle.apply(backward(state), "sys", inverse=True)
            amps = state.amplitudes.copy()
            amps[0] = -amps[0]
            state = forward(psi_oracle.apply(state.replace(-amps), "sys"))
    else:
        state = forward(start)

    flag_branch, flag_layout = branch_amplitudes(state, {"flag": 1})
    flag_weight = float(np.vdot(flag_branch, flag_branch).real) * state.norm_tracked
    amps, sys_layout = branch_amplitudes(state, {"flag": 1, "phase": 0})
    raw_p = float(np.vdot(amps, amps).real)
    p = raw_p * state.norm_tracked
    if raw_p < POSTSELECT_FLOOR:
        raise PostSelectionError("inversion post-selection has zero probability")
    residual = 1.0 - (p / flag_weight if flag_weight > 0 else 0.0)
    out = StateVector(amps / np.sqrt(raw_p), sys_layout, p)

    b = classical.fourier_matrix(spec.N).conj().T @ psi.amplitudes
    ideal_p = float(np.sum(np.abs(b / (plan.kappa * lam)) ** 2))
    lower = 1.0 / plan.kappa ** 2
    diagnostics = {
        "T": plan.T, "kappa": plan.kappa, "backend": plan.backend,
        "ideal_probability": ideal_p,
        "lower_bound": lower,
        "lower_bound_ok": bool(p >= lower - 2.0 ** (-plan.T + 2)),
        "zero_phase_weight": zero_branch,
        "clamped_weight": clamped,
        "flag_weight": flag_weight,
        "uncompute_residual": residual,
        "amplification_iterations": iterations,
    }
    n_pe = 2 * (2 * iterations + 1)
    calls = {"phase_estimations": n_pe, "controlled_powers": n_pe * plan.T,
             "psi_oracle": 2 * iterations + 1 if iterations else 0}
    scale = plan.kappa / spec.scale
    return LcuResult(out, p, tally, scale=scale, calls=calls, diagnostics=diagnostics)


def amplification_rounds(kappa: float) -> int:
    """Rounds that take the worst-case success amplitude 1/kappa closest to 1."""
    theta = np.arcsin(min(1.0, 1.0 / kappa))
    return max(0, int(round(np.pi / (4 * theta) - 0.5)))
