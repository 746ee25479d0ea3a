"""Second-order vacuum-energy shifts of a confined 1+1D Dirac field.

Modules
-------
spectral_basis
    Closed-form bag eigenmodes and a lattice cross-check.
potentials
    General and pure-gauge perturbations.
matrix_elements
    Quadrature of ``V_{m,n}`` and the pure-gauge identities.
vacuum_sums
    Truncated vacuum-energy sums under different summation orders.
fock_oracle
    Exact diagonalization of the second-quantized model on a small window.
cli
    Config-driven command-line experiments.
"""
__version__ = "0.1.0"

from .errors import (
    AdiabaticError, ConfigError, DegeneracyError, DiracVacError, InvariantError,
    MatchingError, QuadratureError, RootFindingError, TableMissingError,
)
from .spectral_basis import Basis, BoxParams, Mode, build_basis
from .potentials import (
    ChiSpec, Potential, make_gauge_potential, make_general_potential, step_well, zero_potential,
)
from .matrix_elements import MatrixElementTable, build_table
from .vacuum_sums import Truncation, VacuumShiftReport, vacuum_shift_report
from .fock_oracle import ModeWindow, VacuumChoice, build_operators

__all__ = [
    "AdiabaticError", "ConfigError", "DegeneracyError", "DiracVacError", "InvariantError",
    "MatchingError", "QuadratureError", "RootFindingError", "TableMissingError",
    "Basis", "BoxParams", "Mode", "build_basis",
    "ChiSpec", "Potential", "make_gauge_potential", "make_general_potential", "step_well", "zero_potential",
    "MatrixElementTable", "build_table",
    "Truncation", "VacuumShiftReport", "vacuum_shift_report",
    "ModeWindow", "VacuumChoice", "build_operators",
]
