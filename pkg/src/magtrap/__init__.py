"""
Stability and lifetime of a neutral spin-1/2 particle in a magnetic trap.

Classical coupled translation-spin dynamics, the normal-mode spectrum of
the linearized motion and the quantum escape lifetime through spin flips.
"""

from .trap_model import (ATOM, NEUTRON, PRESETS, FrictionCoefficients, InvalidConfigError,
                         ScaledFriction, TrapConfig, load_config, parse_config)
from .mode_analysis import secular_roots, spin_down_modes, spin_up_modes, sweep
from .classical_dynamics import ClassicalState, integrate
from .quantum_lifetime import lifetime, matrix_element

__all__ = [
    "ATOM", "NEUTRON", "PRESETS", "FrictionCoefficients", "InvalidConfigError",
    "ScaledFriction", "TrapConfig", "load_config", "parse_config",
    "secular_roots", "spin_down_modes", "spin_up_modes", "sweep",
    "ClassicalState", "integrate", "lifetime", "matrix_element",
]
