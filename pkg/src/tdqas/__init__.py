"""Quantum assisted simulation of time-dependent Hamiltonians, emulated classically."""

from .ansatz import (
    ExtendedOperatorSet,
    MomentBasis,
    closure_of_strings,
    cumulative_k_moment_basis,
    extended_operator_set,
    group_growth_report,
)
from .errors import BuildError, ConfigError, NumericalError, TdqasError
from .evolution import EvolutionConfig, QasProblem, TrajectoryRecord, run_closed
from .hamiltonian import DriveFunction, TimeDependentHamiltonian
from .lindblad import LindbladModel, run_open
from .overlaps import BackendSpec, OverlapSet, build_overlap_set
from .pauli import PauliString, PauliSum, parse_pauli
from .states import InitialState

__version__ = "0.1.0"

__all__ = [
    "BackendSpec",
    "BuildError",
    "ConfigError",
    "DriveFunction",
    "EvolutionConfig",
    "ExtendedOperatorSet",
    "InitialState",
    "LindbladModel",
    "MomentBasis",
    "NumericalError",
    "OverlapSet",
    "PauliString",
    "PauliSum",
    "QasProblem",
    "TdqasError",
    "TimeDependentHamiltonian",
    "TrajectoryRecord",
    "build_overlap_set",
    "closure_of_strings",
    "cumulative_k_moment_basis",
    "extended_operator_set",
    "group_growth_report",
    "parse_pauli",
    "run_closed",
    "run_open",
]
