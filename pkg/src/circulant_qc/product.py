"""
Oracles for products of circulants.

C1 C2 ... Cd is circulant with the d-fold cyclic convolution of the factor
vectors as parameters. Its preparation oracle loads every factor on its own
register and adds them all into an output register:
|0>|j1>...|jd> -> |j1 + ... + jd mod N>|j1>...|jd>. The factor registers
stay behind as j-dependent garbage, which the LCU sandwich tolerates because
select(V) never touches them.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .arith import controlled_add, controlled_subtract
from .circulant import CirculantSpec, _finish, _system_target
from .errors import CircuitError
from .lcu import ComposedFamily, LcuPipeline, LcuResult, ShiftFamily
from .oracles import AmplitudeOracle, probability_oracle
from .sim import GateTally, RegisterLayout, StateVector, marginal


@dataclass(frozen=True)
class ProductOracle:
    factors: tuple[AmplitudeOracle, ...]
    output: str = "out"
    backend: str = "perm"

    @property
    def L(self) -> int:
        return self.factors[0].width

    @property
    def factor_registers(self) -> tuple[str, ...]:
        return tuple(f"f{i + 1}" for i in range(len(self.factors)))

    @property
    def ancillas(self) -> tuple[tuple[str, int], ...]:
        return ((self.output, self.L),) + tuple((n, self.L) for n in self.factor_registers)

    @property
    def width(self) -> int:
        return (len(self.factors) + 1) * self.L

    def apply(self, state: StateVector, inverse: bool = False,
              tally: GateTally | None = None) -> StateVector:
        regs = self.factor_registers
        if not inverse:
            for oracle, reg in zip(self.factors, regs):
                state = oracle.apply(state, reg)
            for reg in reversed(regs):
                state = controlled_add(state, reg, self.output, tally, self.backend)
            return state
        for reg in regs:
            state = controlled_subtract(state, reg, self.output, tally, self.backend)
        for oracle, reg in reversed(list(zip(self.factors, regs))):
            state = oracle.apply(state, reg, inverse=True)
        return state


def build_product_oracle(factors: Sequence[AmplitudeOracle], backend: str = "perm") -> ProductOracle:
    factors = tuple(factors)
    if len(factors) < 2:
        raise CircuitError("a product oracle needs at least two factors")
    widths = {f.width for f in factors}
    if len(widths) != 1:
        raise CircuitError(f"factor oracles have different widths {sorted(widths)}")
    return ProductOracle(factors, backend=backend)


def product_state(oracle: ProductOracle) -> StateVector:
    layout = RegisterLayout.of(*oracle.ancillas)
    return oracle.apply(StateVector.zeros(layout))


def product_marginals(oracle: ProductOracle) -> np.ndarray:
    """Probability of each value of the output register."""
    return marginal(product_state(oracle), oracle.output)


def apply_product_circulant(factors: Sequence[CirculantSpec], psi: StateVector,
                            amplify: int | None = None, psi_oracle: AmplitudeOracle | None = None,
                            backend: str = "perm", tally: GateTally | None = None) -> LcuResult:
    factors = list(factors)
    if len(factors) < 2:
        raise CircuitError("a product needs at least two factors")
    if len({f.L for f in factors}) != 1:
        raise CircuitError("factor circulants have different widths")
    if any(f.sign_mode != factors[0].sign_mode or f.sign_mode != "plain" for f in factors):
        raise CircuitError("products are supported for plain-sign factors only")
    target = _system_target(psi, factors[0].L)
    prod = build_product_oracle([probability_oracle(f.c) for f in factors], backend)
    family = ComposedFamily((ShiftFamily(prod.output, tuple(target), "plain", backend),),
                            garbage=prod.factor_registers)
    pipeline = LcuPipeline(_Prep(prod, tally), family, psi.layout)
    scale = float(np.prod([f.scale for f in factors]))
    res = _finish(pipeline, psi, amplify, psi_oracle, tally, scale)
    res.calls = {"factor_oracles": res.calls.get("alpha_oracle", 2) * len(factors),
                 **res.calls}
    return res


@dataclass(frozen=True)
class _Prep:
    """Adapts a ProductOracle to the pipeline's prep protocol with gate tallying."""

    oracle: ProductOracle
    tally: GateTally | None = None

    @property
    def ancillas(self):
        return self.oracle.ancillas

    def apply(self, state: StateVector, inverse: bool = False) -> StateVector:
        return self.oracle.apply(state, inverse, self.tally)
