"""
Circulant and circulant-like operators as LCU pipelines.

C = sum_j c_j V_j is realized by loading sqrt(c_j) on an index register,
subtracting the index from the data register and unloading. Toeplitz matrices
are embedded in a 2N circulant whose extra data qubit is post-selected on 0;
Hankel matrices reuse the Toeplitz circuit behind a full bit flip. Block
circulants swap select(V) for select(V (x) U) or a pair of subtractors.

Raw parameters that do not sum to one are normalized; ``LcuResult.scale``
carries the factor so ``result.operator_output()`` is the unnormalized
operator applied to the input.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import classical
from .arith import Gate
from .classical import NEGATE_V0, PLAIN
from .errors import CircuitError
from .lcu import (ComposedFamily, ExplicitFamily, IndexPhaseFamily, LcuPipeline,
                  LcuResult, ShiftFamily, amplitude_amplify, bind_oracle, run_pipeline)
from .oracles import AmplitudeOracle, build_oracle, probability_oracle
from .sim import X, GateTally, RegisterLayout, StateVector, is_unitary

NORM_TOL = 1e-10


def _log2_exact(n: int, what: str) -> int:
    L = int(round(np.log2(n))) if n > 0 else -1
    if L < 1 or 2 ** L != n:
        raise CircuitError(f"{what} length {n} is not a power of two >= 2")
    return L


def _normalize(values, what: str) -> tuple[np.ndarray, float]:
    v = np.asarray(values, dtype=float)
    if np.any(v < 0):
        raise CircuitError(f"{what} parameters must be nonnegative")
    total = float(v.sum())
    if total <= 0:
        raise CircuitError(f"{what} parameters sum to zero")
    return v / total, total


@dataclass(frozen=True)
class CirculantSpec:
    c: np.ndarray
    sign_mode: str = PLAIN
    scale: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        object.__setattr__(self, "c", c)
        _log2_exact(len(c), "circulant")
        if np.any(c < 0):
            raise CircuitError("circulant parameters must be nonnegative")
        if abs(c.sum() - 1.0) > NORM_TOL:
            raise CircuitError(f"circulant parameters sum to {c.sum():.12g}, not 1")
        if self.sign_mode not in (PLAIN, NEGATE_V0):
            raise CircuitError(f"unknown sign mode {self.sign_mode!r}")

    @classmethod
    def from_raw(cls, values, sign_mode: str = PLAIN) -> "CirculantSpec":
        c, total = _normalize(values, "circulant")
        return cls(c, sign_mode, total)

    @property
    def N(self) -> int:
        return len(self.c)

    @property
    def L(self) -> int:
        return _log2_exact(self.N, "circulant")

    def dense(self) -> np.ndarray:
        """The realized (normalized) operator."""
        return classical.dense_circulant(self.c, self.sign_mode)

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        D = self.dense()
        return bool(np.allclose(D, D.conj().T, atol=atol))


def _system_target(psi: StateVector, width: int) -> list[str]:
    names = psi.layout.names
    if psi.num_qubits != width:
        raise CircuitError(f"state has {psi.num_qubits} qubits, operator needs {width}")
    return names


def circulant_pipeline(spec: CirculantSpec, system_layout: RegisterLayout,
                       target: Sequence[str], backend: str = "perm",
                       flags: Sequence[str] = ()) -> LcuPipeline:
    family = ShiftFamily(tuple(["idx"]), tuple(target), spec.sign_mode, backend)
    prep = bind_oracle(probability_oracle(spec.c), [("idx", spec.L)])
    return LcuPipeline(prep, family, system_layout, tuple(flags))


def _finish(pipeline: LcuPipeline, psi_ext: StateVector, amplify: int | None,
            psi_oracle: AmplitudeOracle | None, tally: GateTally | None,
            scale: float) -> LcuResult:
    if amplify:
        if psi_oracle is None:
            raise CircuitError("amplitude amplification needs the input-state oracle")
        res = amplitude_amplify(pipeline, psi_oracle, int(amplify), tally)
    else:
        res = run_pipeline(pipeline, psi_ext, tally)
    res.scale = scale
    return res


def apply_circulant(spec: CirculantSpec, psi: StateVector, amplify: int | None = None,
                    psi_oracle: AmplitudeOracle | None = None, backend: str = "perm",
                    tally: GateTally | None = None) -> LcuResult:
    target = _system_target(psi, spec.L)
    pipeline = circulant_pipeline(spec, psi.layout, target, backend)
    return _finish(pipeline, psi, amplify, psi_oracle, tally, spec.scale)


# Toeplitz / Hankel -------------------------------------------------------------

@dataclass(frozen=True)
class ToeplitzSpec:
    """``t`` stored as t_{-(N-1)}, ..., t_0, ..., t_{N-1}."""

    t: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        object.__setattr__(self, "t", t)
        if len(t) % 2 != 1:
            raise CircuitError("Toeplitz parameters must have odd length 2N-1")
        _log2_exact((len(t) + 1) // 2, "Toeplitz dimension")
        if np.any(t < 0):
            raise CircuitError("Toeplitz parameters must be nonnegative")
        if abs(t.sum() - 1.0) > NORM_TOL:
            raise CircuitError(f"Toeplitz parameters sum to {t.sum():.12g}, not 1")

    @classmethod
    def from_raw(cls, values) -> "ToeplitzSpec":
        t, total = _normalize(values, "Toeplitz")
        return cls(t, total)

    @property
    def N(self) -> int:
        return (len(self.t) + 1) // 2

    @property
    def L(self) -> int:
        return _log2_exact(self.N, "Toeplitz dimension")

    def at(self, j: int) -> float:
        return float(self.t[j + self.N - 1])

    def dense(self) -> np.ndarray:
        return classical.dense_toeplitz(self.t)


@dataclass(frozen=True)
class HankelSpec:
    """``h`` stored as h_{-(N-1)}, ..., h_0, ..., h_{N-1}."""

    h: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        h = np.asarray(self.h, dtype=float)
        object.__setattr__(self, "h", h)
        ToeplitzSpec(h)  # same shape/sign/normalization contract

    @classmethod
    def from_raw(cls, values) -> "HankelSpec":
        h, total = _normalize(values, "Hankel")
        return cls(h, total)

    @property
    def N(self) -> int:
        return (len(self.h) + 1) // 2

    @property
    def L(self) -> int:
        return _log2_exact(self.N, "Hankel dimension")

    def dense(self) -> np.ndarray:
        return classical.dense_hankel(self.h)

    def as_toeplitz(self) -> ToeplitzSpec:
        """H = T P with t_j = h_{-j}."""
        return ToeplitzSpec(self.h[::-1].copy(), self.scale)


def embed_toeplitz(spec: ToeplitzSpec) -> CirculantSpec:
    """c = (t_0, t_-1, ..., t_-(N-1), 0, t_{N-1}, ..., t_1) of length 2N."""
    N = spec.N
    c = np.zeros(2 * N)
    for j in range(N):
        c[j] = spec.at(-j)
    for j in range(1, N):
        c[2 * N - j] = spec.at(j)
    return CirculantSpec(c, PLAIN, spec.scale)


def apply_toeplitz(spec: ToeplitzSpec, psi: StateVector, amplify: int | None = None,
                   psi_oracle: AmplitudeOracle | None = None, backend: str = "perm",
                   tally: GateTally | None = None) -> LcuResult:
    target = _system_target(psi, spec.L)
    circ = embed_toeplitz(spec)
    psi_ext = psi.with_registers(("pad", 1))
    pipeline = circulant_pipeline(circ, psi_ext.layout, target + ["pad"], backend, flags=("pad",))
    return _finish(pipeline, psi_ext, amplify, psi_oracle, tally, spec.scale)


def _with_bitflip(oracle: AmplitudeOracle) -> AmplitudeOracle:
    """P O_psi as one oracle: prepares the bit-reversed-value state."""
    flips = tuple(Gate((q,), (), X) for q in range(oracle.width))
    return AmplitudeOracle(oracle.width, oracle.amplitudes[::-1].copy(), oracle.ops + flips)


def apply_hankel(spec: HankelSpec, psi: StateVector, amplify: int | None = None,
                 psi_oracle: AmplitudeOracle | None = None, backend: str = "perm",
                 tally: GateTally | None = None) -> LcuResult:
    from .arith import bitflip_all

    target = _system_target(psi, spec.L)
    flipped = bitflip_all(psi, target, tally)
    if psi_oracle is not None:
        psi_oracle = _with_bitflip(psi_oracle)
    return apply_toeplitz(spec.as_toeplitz(), flipped, amplify, psi_oracle, backend, tally)


# block circulants ---------------------------------------------------------------

@dataclass(frozen=True)
class BlockSpec:
    """``kind='ub'``: weights ``c`` with explicit unitary ``blocks`` or a phase
    rule ``theta`` (U_j = exp(i theta j) I on ``block_width`` qubits).
    ``kind='cb'``: nonnegative ``weights`` of shape (N, N')."""

    kind: str
    c: np.ndarray | None = None
    blocks: tuple | None = None
    theta: float | None = None
    block_width: int = 0
    weights: np.ndarray | None = None
    scale: float = 1.0

    def __post_init__(self):
        if self.kind == "ub":
            c = np.asarray(self.c, dtype=float)
            object.__setattr__(self, "c", c)
            CirculantSpec(c)
            if (self.blocks is None) == (self.theta is None):
                raise CircuitError("UB spec needs exactly one of explicit blocks or a phase rule")
            if self.blocks is not None:
                blocks = tuple(np.asarray(b, dtype=complex) for b in self.blocks)
                if len(blocks) != len(c):
                    raise CircuitError(f"{len(blocks)} blocks given for {len(c)} weights")
                dim = blocks[0].shape[0]
                bw = int(round(np.log2(dim)))
                if 2 ** bw != dim:
                    raise CircuitError("block dimension must be a power of two")
                for j, b in enumerate(blocks):
                    if b.shape != (dim, dim):
                        raise CircuitError("blocks must share one square shape")
                    if c[j] > 0 and not is_unitary(b):
                        raise CircuitError(f"block {j} is not unitary within 1e-10")
                object.__setattr__(self, "blocks", blocks)
                object.__setattr__(self, "block_width", bw)
        elif self.kind == "cb":
            w = np.asarray(self.weights, dtype=float)
            object.__setattr__(self, "weights", w)
            if w.ndim != 2:
                raise CircuitError("CB weights must be a matrix")
            _log2_exact(w.shape[0], "CB outer")
            _log2_exact(w.shape[1], "CB inner")
            if np.any(w < 0) or abs(w.sum() - 1.0) > NORM_TOL:
                raise CircuitError("CB weights must be nonnegative and sum to 1")
            object.__setattr__(self, "block_width", _log2_exact(w.shape[1], "CB inner"))
        else:
            raise CircuitError(f"unknown block kind {self.kind!r}")

    @classmethod
    def ub(cls, c, blocks) -> "BlockSpec":
        cn, total = _normalize(c, "UB")
        return cls("ub", c=cn, blocks=tuple(blocks), scale=total)

    @classmethod
    def ub_phase(cls, c, theta: float, block_width: int = 0) -> "BlockSpec":
        cn, total = _normalize(c, "UB")
        return cls("ub", c=cn, theta=float(theta), block_width=int(block_width), scale=total)

    @classmethod
    def cb(cls, weights) -> "BlockSpec":
        w = np.asarray(weights, dtype=float)
        wn, total = _normalize(w.ravel(), "CB")
        return cls("cb", weights=wn.reshape(w.shape), scale=total)

    @property
    def L(self) -> int:
        n = len(self.c) if self.kind == "ub" else self.weights.shape[0]
        return _log2_exact(n, "block outer")

    def block_matrices(self) -> list[np.ndarray]:
        if self.blocks is not None:
            return list(self.blocks)
        dim = 2 ** self.block_width
        return [np.exp(1j * self.theta * j) * np.eye(dim) for j in range(len(self.c))]

    def dense(self) -> np.ndarray:
        if self.kind == "ub":
            return classical.dense_block_ub(self.c, self.block_matrices())
        return classical.dense_block_cb(self.weights)


def _block_layout(psi: StateVector, inner: str, inner_width: int, outer: str,
                  outer_width: int) -> StateVector:
    if psi.num_qubits != inner_width + outer_width:
        raise CircuitError(
            f"state has {psi.num_qubits} qubits, block operator needs {inner_width + outer_width}")
    layout = RegisterLayout.of((inner, inner_width), (outer, outer_width))
    return StateVector(psi.amplitudes, layout, psi.norm_tracked)


def apply_block_ub(spec: BlockSpec, psi: StateVector, backend: str = "perm",
                   tally: GateTally | None = None) -> LcuResult:
    """C_UB = sum_j c_j V_j (x) U_j; the block register is the low factor."""
    if spec.kind != "ub":
        raise CircuitError("apply_block_ub needs a UB spec")
    state = _block_layout(psi, "blk", spec.block_width, "sys", spec.L)
    shift = ShiftFamily("idx", "sys", PLAIN, backend)
    if spec.theta is not None:
        blocks = IndexPhaseFamily("idx", spec.theta)
    else:
        blocks = ExplicitFamily("idx", "blk", spec.blocks)
    family = ComposedFamily((shift, blocks))
    prep = bind_oracle(probability_oracle(spec.c), [("idx", spec.L)])
    res = run_pipeline(LcuPipeline(prep, family, state.layout), state, tally)
    res.scale = spec.scale
    return res


def apply_block_cb(spec: BlockSpec, psi: StateVector, backend: str = "perm",
                   tally: GateTally | None = None) -> LcuResult:
    """C_CB = sum c_jj' V_j (x) V_j' with one joint oracle and two subtractors."""
    if spec.kind != "cb":
        raise CircuitError("apply_block_cb needs a CB spec")
    Lo, Li = spec.L, spec.block_width
    state = _block_layout(psi, "inner", Li, "outer", Lo)
    family = ComposedFamily((ShiftFamily("idx_out", "outer", PLAIN, backend),
                             ShiftFamily("idx_in", "inner", PLAIN, backend)))
    # joint register index is j * N' + j' (outer index high)
    oracle = build_oracle(np.sqrt(spec.weights.ravel()))
    prep = bind_oracle(oracle, [("idx_in", Li), ("idx_out", Lo)])
    res = run_pipeline(LcuPipeline(prep, family, state.layout), state, tally)
    res.scale = spec.scale
    return res
