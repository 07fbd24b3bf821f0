"""
Dense statevector substrate.

Conventions:
- qubit 0 is the least significant bit of the basis index;
- a register is a contiguous block of qubits and its value is read with its
  own lowest qubit as LSB;
- operations are pure: they return a new StateVector and never mutate input.

Two execution styles coexist. Gate-level application (``apply_gate``) is used
when gate counts matter; ``permute_basis`` applies a register-wide bijection on
basis labels directly and is used for the fast arithmetic backend.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import CircuitError, PostSelectionError, ResourceError

MAX_QUBITS = 26
POSTSELECT_FLOOR = 1e-14
UNITARY_ATOL = 1e-10


@dataclass(frozen=True)
class Register:
    name: str
    width: int
    offset: int

    @property
    def qubits(self) -> list[int]:
        return list(range(self.offset, self.offset + self.width))


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered, contiguous, disjoint named registers starting at qubit 0."""

    registers: tuple[Register, ...] = ()

    @classmethod
    def of(cls, *spec: tuple[str, int]) -> "RegisterLayout":
        return cls().extend(*spec)

    def extend(self, *spec: tuple[str, int]) -> "RegisterLayout":
        regs = list(self.registers)
        offset = self.num_qubits
        names = {r.name for r in regs}
        for name, width in spec:
            if name in names:
                raise CircuitError(f"duplicate register name {name!r}")
            if width < 0:
                raise CircuitError(f"register {name!r} has negative width")
            regs.append(Register(name, int(width), offset))
            names.add(name)
            offset += int(width)
        return RegisterLayout(tuple(regs))

    @property
    def num_qubits(self) -> int:
        return sum(r.width for r in self.registers)

    @property
    def names(self) -> list[str]:
        return [r.name for r in self.registers]

    def __contains__(self, name: str) -> bool:
        return any(r.name == name for r in self.registers)

    def __getitem__(self, name: str) -> Register:
        for r in self.registers:
            if r.name == name:
                return r
        raise CircuitError(f"unknown register {name!r}")

    def qubits(self, regs: str | Sequence[str]) -> list[int]:
        """Qubits of one register, or of several concatenated low-to-high."""
        if isinstance(regs, str):
            return self[regs].qubits
        out: list[int] = []
        for name in regs:
            out.extend(self[name].qubits)
        return out

    def width(self, regs: str | Sequence[str]) -> int:
        return len(self.qubits(regs))

    def spec(self) -> list[tuple[str, int]]:
        return [(r.name, r.width) for r in self.registers]


def _check_cap(n: int) -> None:
    if n > MAX_QUBITS:
        raise ResourceError(
            f"{n} qubits requested; dense amplitudes are capped at {MAX_QUBITS}")


@dataclass
class StateVector:
    amplitudes: np.ndarray
    layout: RegisterLayout
    norm_tracked: float = 1.0

    def __post_init__(self) -> None:
        _check_cap(self.layout.num_qubits)
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2 ** self.layout.num_qubits,):
            raise CircuitError(
                f"amplitude vector has shape {self.amplitudes.shape}, layout needs "
                f"{2 ** self.layout.num_qubits}")

    @property
    def num_qubits(self) -> int:
        return self.layout.num_qubits

    @classmethod
    def zeros(cls, layout: RegisterLayout) -> "StateVector":
        _check_cap(layout.num_qubits)
        amps = np.zeros(2 ** layout.num_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(amps, layout)

    @classmethod
    def basis(cls, layout: RegisterLayout, **values: int) -> "StateVector":
        _check_cap(layout.num_qubits)
        index = 0
        for name, v in values.items():
            reg = layout[name]
            if not 0 <= v < 2 ** reg.width:
                raise CircuitError(f"value {v} out of range for register {name!r}")
            index |= int(v) << reg.offset
        amps = np.zeros(2 ** layout.num_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(amps, layout)

    @classmethod
    def from_array(cls, amplitudes, layout: RegisterLayout | str = "sys",
                   normalize: bool = False) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        if isinstance(layout, str):
            n = int(round(np.log2(len(amps)))) if len(amps) else -1
            if n < 0 or 2 ** n != len(amps):
                raise CircuitError(f"length {len(amps)} is not a power of two")
            layout = RegisterLayout.of((layout, n))
        norm = np.linalg.norm(amps)
        if normalize:
            if norm == 0:
                raise CircuitError("cannot normalize the zero vector")
            amps = amps / norm
        elif abs(norm - 1.0) > 1e-10:
            raise CircuitError(f"state is not normalized (norm {norm:.3e})")
        return cls(amps, layout)

    def tensor(self, other: "StateVector") -> "StateVector":
        """``other`` placed on qubits above this state's qubits."""
        layout = self.layout.extend(*other.layout.spec())
        return StateVector(np.kron(other.amplitudes, self.amplitudes), layout,
                           self.norm_tracked * other.norm_tracked)

    def with_registers(self, *spec: tuple[str, int]) -> "StateVector":
        """Append fresh |0> registers on top."""
        return self.tensor(StateVector.zeros(RegisterLayout.of(*spec)))

    def register_values(self, regs: str | Sequence[str]) -> np.ndarray:
        return register_values(self.layout, regs)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def replace(self, amplitudes: np.ndarray, norm_tracked: float | None = None) -> "StateVector":
        return StateVector(amplitudes, self.layout,
                           self.norm_tracked if norm_tracked is None else norm_tracked)


def register_values(layout: RegisterLayout, regs: str | Sequence[str]) -> np.ndarray:
    """Value of a register (or concatenation) for every basis index."""
    idx = np.arange(2 ** layout.num_qubits, dtype=np.int64)
    vals = np.zeros_like(idx)
    for pos, q in enumerate(layout.qubits(regs)):
        vals |= ((idx >> q) & 1) << pos
    return vals


def _with_register_value(idx: np.ndarray, qubits: Sequence[int], value: np.ndarray) -> np.ndarray:
    out = idx.copy()
    for pos, q in enumerate(qubits):
        out &= ~(1 << q)
        out |= ((value >> pos) & 1) << q
    return out


@dataclass
class GateTally:
    """Additive one/two-qubit gate counts keyed by gate kind."""

    counts: Counter = field(default_factory=Counter)

    KINDS = ("single", "cphase", "two_qubit")

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def add(self, kind: str, n: int = 1) -> None:
        if kind not in self.KINDS:
            raise CircuitError(f"unknown gate kind {kind!r}")
        self.counts[kind] += n

    def merge(self, other: "GateTally", times: int = 1) -> "GateTally":
        for k, v in other.counts.items():
            self.counts[k] += v * times
        return self

    def __add__(self, other: "GateTally") -> "GateTally":
        return GateTally(Counter(self.counts)).merge(other)

    def as_dict(self) -> dict:
        d = {k: int(self.counts.get(k, 0)) for k in self.KINDS}
        d["total"] = self.total
        return d


def classify_gate(n_targets: int, n_controls: int, matrix: np.ndarray) -> str:
    size = n_targets + n_controls
    if size == 1:
        return "single"
    if size == 2:
        # a controlled-U is diagonal exactly when U is
        diag = np.allclose(matrix, np.diag(np.diag(matrix)), atol=1e-14)
        return "cphase" if diag else "two_qubit"
    raise CircuitError(f"gate on {size} qubits cannot be tallied as a 1/2-qubit gate")


def is_unitary(matrix: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    m = np.asarray(matrix)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(
        m @ m.conj().T, np.eye(m.shape[0]), atol=atol)


def _validate_qubits(n: int, targets: Sequence[int], controls: Sequence[int]) -> None:
    allq = list(targets) + list(controls)
    if len(set(allq)) != len(allq):
        raise CircuitError(f"overlapping target/control qubits {allq}")
    for q in allq:
        if not 0 <= q < n:
            raise CircuitError(f"qubit index {q} out of range for {n} qubits")


def _apply_matrix(amps: np.ndarray, n: int, targets: Sequence[int], controls: Sequence[int],
                  control_values: Sequence[int], matrix: np.ndarray) -> np.ndarray:
    k = len(targets)
    psi = amps.reshape((2,) * n) if n else amps.reshape(())
    sel: list = [slice(None)] * n
    for c, v in zip(controls, control_values):
        sel[n - 1 - c] = int(v)
    sel_t = tuple(sel)
    sub = psi[sel_t]
    remaining = [q for q in range(n - 1, -1, -1) if q not in set(controls)]
    # matrix index: targets[0] is its LSB, so targets go last in reverse order
    src = [remaining.index(t) for t in reversed(targets)]
    dst = list(range(sub.ndim - k, sub.ndim))
    moved = np.moveaxis(sub, src, dst)
    shape = moved.shape
    new = (moved.reshape(-1, 2 ** k) @ matrix.T).reshape(shape)
    out = psi.copy()
    out[sel_t] = np.moveaxis(new, dst, src)
    return out.reshape(-1)


def apply_gate(state: StateVector, targets: Sequence[int], controls: Sequence[int],
               matrix, tally: GateTally | None = None, *,
               control_values: Sequence[int] | None = None) -> StateVector:
    """Apply ``matrix`` to ``targets`` on branches where every control matches.

    ``targets[0]`` is the least significant bit of the matrix index. Controls
    fire on 1 unless ``control_values`` says otherwise.
    """
    targets = [int(t) for t in targets]
    controls = [int(c) for c in controls]
    matrix = np.asarray(matrix, dtype=complex)
    k = len(targets)
    if matrix.shape != (2 ** k, 2 ** k):
        raise CircuitError(f"matrix shape {matrix.shape} does not match {k} targets")
    _validate_qubits(state.num_qubits, targets, controls)
    if not is_unitary(matrix):
        raise CircuitError("gate matrix is not unitary within 1e-10")
    cvals = [1] * len(controls) if control_values is None else list(control_values)
    if len(cvals) != len(controls):
        raise CircuitError("control_values length differs from controls")
    if tally is not None:
        tally.add(classify_gate(k, len(controls), matrix))
    new = _apply_matrix(state.amplitudes, state.num_qubits, targets, controls, cvals, matrix)
    return state.replace(new)


def apply_operator(state: StateVector, targets: Sequence[int], matrix,
                   controls: Sequence[int] = (), *,
                   control_values: Sequence[int] | None = None) -> StateVector:
    """Apply a possibly non-unitary block (an already post-selected effective
    operator) and renormalize; the lost weight multiplies ``norm_tracked``."""
    targets = [int(t) for t in targets]
    controls = [int(c) for c in controls]
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.shape != (2 ** len(targets),) * 2:
        raise CircuitError("matrix shape does not match targets")
    _validate_qubits(state.num_qubits, targets, controls)
    cvals = [1] * len(controls) if control_values is None else list(control_values)
    new = _apply_matrix(state.amplitudes, state.num_qubits, targets, controls, cvals, matrix)
    p = float(np.vdot(new, new).real)
    if p < POSTSELECT_FLOOR:
        raise PostSelectionError("post-selection impossible")
    return StateVector(new / np.sqrt(p), state.layout, state.norm_tracked * p)


def apply_phase(state: StateVector, phases: np.ndarray) -> StateVector:
    """Multiply each basis amplitude by ``phases[index]`` (a diagonal unitary)."""
    phases = np.asarray(phases)
    if not np.allclose(np.abs(phases), 1.0, atol=UNITARY_ATOL):
        raise CircuitError("diagonal is not a phase")
    return state.replace(state.amplitudes * phases)


def permute_basis(state: StateVector, mapping: Callable[[np.ndarray], np.ndarray]) -> StateVector:
    """Apply the basis permutation |i> -> |mapping(i)>."""
    idx = np.arange(2 ** state.num_qubits, dtype=np.int64)
    dest = np.asarray(mapping(idx), dtype=np.int64)
    if len(np.unique(dest)) != len(dest):
        raise CircuitError("mapping is not a bijection")
    new = np.empty_like(state.amplitudes)
    new[dest] = state.amplitudes
    return state.replace(new)


def map_register(state: StateVector, target: str | Sequence[str],
                 fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> StateVector:
    """Permutation-level update of ``target`` as ``fn(target_value, basis_index)``."""
    qubits = state.layout.qubits(target)
    width = len(qubits)

    def mapping(idx: np.ndarray) -> np.ndarray:
        vals = np.zeros_like(idx)
        for pos, q in enumerate(qubits):
            vals |= ((idx >> q) & 1) << pos
        new_vals = np.asarray(fn(vals, idx), dtype=np.int64) % (2 ** width)
        return _with_register_value(idx, qubits, new_vals)

    return permute_basis(state, mapping)


def project_register(state: StateVector, register: str | Sequence[str],
                     outcome: int) -> tuple[StateVector, float]:
    """Post-select ``register == outcome``; returns renormalized state and probability."""
    width = state.layout.width(register)
    if not 0 <= outcome < 2 ** width:
        raise CircuitError(f"outcome {outcome} out of range for width {width}")
    mask = state.register_values(register) == outcome
    kept = np.where(mask, state.amplitudes, 0)
    p = float(np.vdot(kept, kept).real)
    if p < POSTSELECT_FLOOR:
        raise PostSelectionError("post-selection impossible")
    return StateVector(kept / np.sqrt(p), state.layout, state.norm_tracked * p), p


def branch_amplitudes(state: StateVector, fixed: Mapping[str, int]) -> tuple[np.ndarray, RegisterLayout]:
    """Raw (unnormalized) amplitudes of the remaining registers on the branch
    where every register in ``fixed`` holds the given value."""
    remaining = [r for r in state.layout.registers if r.name not in fixed]
    for name in fixed:
        state.layout[name]
    mask = np.ones(2 ** state.num_qubits, dtype=bool)
    for name, v in fixed.items():
        mask &= state.register_values(name) == v
    sub_layout = RegisterLayout.of(*[(r.name, r.width) for r in remaining])
    idx = np.arange(2 ** state.num_qubits, dtype=np.int64)[mask]
    sub_idx = np.zeros_like(idx)
    pos = 0
    for r in remaining:
        for q in r.qubits:
            sub_idx |= ((idx >> q) & 1) << pos
            pos += 1
    out = np.zeros(2 ** sub_layout.num_qubits, dtype=complex)
    out[sub_idx] = state.amplitudes[mask]
    return out, sub_layout


def marginal(state: StateVector, register: str | Sequence[str]) -> np.ndarray:
    width = state.layout.width(register)
    probs = np.abs(state.amplitudes) ** 2
    return np.bincount(state.register_values(register), weights=probs, minlength=2 ** width)


def measure_sample(state: StateVector, register: str | Sequence[str],
                   seed: int) -> tuple[int, StateVector]:
    """Sample ``register`` from its marginal with an explicit seed; returns
    the outcome and the collapsed state."""
    probs = marginal(state, register)
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    outcome = int(rng.choice(len(probs), p=probs))
    collapsed, _ = project_register(state, register, outcome)
    return outcome, collapsed


def state_distance(a: StateVector | np.ndarray, b: StateVector | np.ndarray,
                   mode: str = "phase") -> float:
    """``exact``: ||a-b||. ``phase``: min over global phase, sqrt(2-2|<a|b>|)
    for unit vectors (computed in the general form for unnormalized input)."""
    va = a.amplitudes if isinstance(a, StateVector) else np.asarray(a, dtype=complex)
    vb = b.amplitudes if isinstance(b, StateVector) else np.asarray(b, dtype=complex)
    if va.shape != vb.shape:
        raise CircuitError(f"dimension mismatch {va.shape} vs {vb.shape}")
    if mode == "exact":
        return float(np.linalg.norm(va - vb))
    if mode != "phase":
        raise CircuitError(f"unknown distance mode {mode!r}")
    sq = np.vdot(va, va).real + np.vdot(vb, vb).real - 2 * abs(np.vdot(va, vb))
    return float(np.sqrt(max(sq, 0.0)))


# common gates
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def phase_gate(angle: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * angle)]).astype(complex)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def random_state(layout: RegisterLayout | int, rng: np.random.Generator) -> StateVector:
    if isinstance(layout, int):
        layout = RegisterLayout.of(("sys", layout))
    v = rng.normal(size=2 ** layout.num_qubits) + 1j * rng.normal(size=2 ** layout.num_qubits)
    return StateVector(v / np.linalg.norm(v), layout)


def iter_basis(layout: RegisterLayout) -> Iterable[StateVector]:
    for i in range(2 ** layout.num_qubits):
        amps = np.zeros(2 ** layout.num_qubits, dtype=complex)
        amps[i] = 1
        yield StateVector(amps, layout)
