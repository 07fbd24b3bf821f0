"""
Steady-state response of a cyclic structure with N identical sectors.

With equal sector masses and no damping, the response to a travelling-wave
force of order n solves (K - n Omega I) q0 = f with K circulant. The LCU
machinery needs nonnegative parameters, so A = K - n Omega I is dispatched on
its sign pattern (off-diagonals must be <= 0):

* ``positive_diagonal``: realize -A / scale with the negated-V0 circulant of
  |entries| and invert its negation, A / scale.
* ``all_negative``: -A / scale is an ordinary nonnegative circulant; invert it.

In both cases scale * realized = -A.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import classical
from .circulant import CirculantSpec
from .classical import NEGATE_V0, PLAIN
from .errors import CircuitError
from .hhl import invert_circulant, plan_inversion
from .sim import RegisterLayout, StateVector, state_distance

POSITIVE_DIAGONAL = "positive_diagonal"
ALL_NEGATIVE = "all_negative"


@dataclass(frozen=True)
class CyclicSystemSpec:
    stiffness_row: np.ndarray
    n: int = 0
    Omega: float = 0.0
    f_amp: complex = 1.0

    def __post_init__(self):
        s = np.asarray(self.stiffness_row, dtype=float)
        object.__setattr__(self, "stiffness_row", s)
        N = len(s)
        if N < 2 or N & (N - 1):
            raise CircuitError(f"number of sectors {N} is not a power of two >= 2")
        if not np.allclose(s, np.roll(s[::-1], 1), atol=1e-12, rtol=0):
            raise CircuitError("stiffness row is not symmetric (need s_j = s_{N-j})")
        if self.f_amp == 0:
            raise CircuitError("force amplitude is zero")

    @property
    def N(self) -> int:
        return len(self.stiffness_row)

    @property
    def shift(self) -> float:
        return self.n * self.Omega

    def system_row(self) -> np.ndarray:
        a = self.stiffness_row.copy()
        a[0] -= self.shift
        return a

    def dense(self) -> np.ndarray:
        """A = K - n Omega I."""
        return classical.dense_circulant(self.system_row())

    def weakly_coupled(self) -> bool:
        a = self.system_row()
        return bool(abs(a[0]) > 2 * np.sum(np.abs(a[1:])))


class AssembledSystem(NamedTuple):
    spec: CirculantSpec
    scale: float
    case: str

    @property
    def sign(self) -> int:
        """scale * realized = sign * A."""
        return -1

    @property
    def negate(self) -> bool:
        """Whether the inversion runs on the negated realized operator."""
        return self.case == POSITIVE_DIAGONAL


def assemble_system(system: CyclicSystemSpec) -> AssembledSystem:
    a = system.system_row()
    off = a[1:]
    if np.any(off > 0):
        raise CircuitError("off-diagonal entries of K - n Omega I must all be <= 0")
    mags = np.abs(a)
    scale = float(mags.sum())
    if scale == 0:
        raise CircuitError("system matrix is zero")
    if a[0] > 0:
        return AssembledSystem(CirculantSpec(mags / scale, NEGATE_V0, scale), scale,
                               POSITIVE_DIAGONAL)
    return AssembledSystem(CirculantSpec(mags / scale, PLAIN, scale), scale, ALL_NEGATIVE)


def travelling_wave_force(N: int, n: int, f_amp: complex = 1.0) -> StateVector:
    """Normalized f_j proportional to f_amp exp(2 pi i n j / N)."""
    L = int(round(np.log2(N)))
    if N < 2 or 2 ** L != N:
        raise CircuitError(f"N = {N} is not a power of two >= 2")
    phase = f_amp / abs(f_amp) if f_amp != 0 else 1.0
    amps = phase * np.exp(2j * np.pi * n * np.arange(N) / N) / np.sqrt(N)
    return StateVector(amps, RegisterLayout.of(("sys", L)))


@dataclass
class CyclicSolution:
    state: StateVector
    q0: np.ndarray  # reconstructed unnormalized solution
    observables: dict


def solve_cyclic(system: CyclicSystemSpec, epsilon: float = 1e-3,
                 observable: np.ndarray | None = None, reference: np.ndarray | None = None,
                 backend: str = "exact_diagonal", force: StateVector | None = None,
                 T: int | None = None) -> CyclicSolution:
    assembled = assemble_system(system)
    spec = assembled.spec
    if classical.condition_number(system.system_row()) == float("inf"):
        raise CircuitError("K - n Omega I is singular")
    f_state = force if force is not None else travelling_wave_force(system.N, system.n,
                                                                    system.f_amp)
    f_norm = abs(system.f_amp) * np.sqrt(system.N)
    f_vec = f_state.amplitudes * f_norm

    plan = plan_inversion(spec, epsilon, backend=backend, T=T, negate=assembled.negate)
    res = invert_circulant(spec, f_state, plan)
    # operator_output inverts (-realized) * scale = A when negated, realized * scale = -A otherwise
    q0 = res.operator_output() * f_norm * (1 if assembled.negate else -1)

    A = system.dense()
    exact = np.linalg.solve(A, f_vec)
    obs = {
        "case": assembled.case,
        "scale": assembled.scale,
        "kappa": classical.condition_number(system.system_row()),
        "rotation_kappa": plan.kappa,
        "phase_bits": plan.T,
        "success_probability": res.success_probability,
        "norm_q0": float(np.linalg.norm(q0)),
        "residual": float(np.linalg.norm(A @ q0 - f_vec) / np.linalg.norm(f_vec)),
        "distance_to_classical": state_distance(res.output.amplitudes,
                                                exact / np.linalg.norm(exact)),
        "force_overlap": float(abs(np.vdot(f_state.amplitudes, res.output.amplitudes))),
        "weakly_coupled": system.weakly_coupled(),
    }
    if observable is not None:
        M = np.asarray(observable, dtype=complex)
        if M.shape != (system.N, system.N):
            raise CircuitError(f"observable must be {system.N}x{system.N}")
        v = res.output.amplitudes
        obs["expectation"] = complex(np.vdot(v, M @ v))
        obs["expectation_unnormalized"] = complex(np.vdot(q0, M @ q0))
    if reference is not None:
        ref = np.asarray(reference, dtype=complex)
        ref = ref / np.linalg.norm(ref)
        obs["overlap"] = complex(np.vdot(ref, res.output.amplitudes))
    return CyclicSolution(res.output, q0, obs)
