"""Quantum LCU circuits for circulant, Toeplitz, Hankel and block-circulant matrices,
simulated on a dense statevector and checked against exact classical linear algebra."""

from .circulant import (BlockSpec, CirculantSpec, HankelSpec, ToeplitzSpec, apply_block_cb,
                        apply_block_ub, apply_circulant, apply_hankel, apply_toeplitz,
                        embed_toeplitz)
from .cyclic import CyclicSystemSpec, assemble_system, solve_cyclic, travelling_wave_force
from .errors import CircuitError, PostSelectionError, ResourceError
from .hamsim import HamSimPlan, apply_segment, plan_simulation, simulate_evolution
from .hhl import InversionPlan, invert_circulant, phase_estimate, plan_inversion
from .lcu import LcuResult, amplitude_amplify, lcu_sandwich, oaa_step
from .oracles import AmplitudeOracle, build_oracle
from .product import (ProductOracle, apply_product_circulant, build_product_oracle,
                      product_marginals)
from .sim import RegisterLayout, StateVector

__all__ = [
    "AmplitudeOracle", "BlockSpec", "CircuitError", "CirculantSpec", "CyclicSystemSpec",
    "HamSimPlan", "HankelSpec", "InversionPlan", "LcuResult", "PostSelectionError",
    "ProductOracle", "RegisterLayout", "ResourceError", "StateVector", "ToeplitzSpec",
    "amplitude_amplify", "apply_block_cb", "apply_block_ub", "apply_circulant",
    "apply_hankel", "apply_product_circulant", "apply_segment", "apply_toeplitz",
    "assemble_system", "build_oracle", "build_product_oracle", "embed_toeplitz",
    "invert_circulant", "lcu_sandwich", "oaa_step", "phase_estimate", "plan_inversion",
    "plan_simulation", "product_marginals", "simulate_evolution", "solve_cyclic",
    "travelling_wave_force",
]
