"""Lattice laboratory for gauged nonlinear Schrodinger equations with
complex nonlinearities and their nonlinear gauge transformations."""

from .errors import (
    ConditionViolated,
    ConfigError,
    DensityBelowFloor,
    GnlseError,
    InversionUnavailable,
    NonFiniteDetected,
    ParseError,
    StabilityViolation,
    ValidationError,
    WindingDetected,
)
from .fields import GaugeField, HydroFields, decompose, recompose
from .grid import Lattice, PhysicalConstants
from .potentials import PotentialSpec, functional_derivative, nonlinearity_split
from .transforms import Generator, build_generator, check_condition
from .evolve import EvolutionState, IntegratorConfig, make_rhs, run

__all__ = [
    "ConditionViolated",
    "ConfigError",
    "DensityBelowFloor",
    "EvolutionState",
    "GaugeField",
    "Generator",
    "GnlseError",
    "HydroFields",
    "IntegratorConfig",
    "InversionUnavailable",
    "Lattice",
    "NonFiniteDetected",
    "ParseError",
    "PhysicalConstants",
    "PotentialSpec",
    "StabilityViolation",
    "ValidationError",
    "WindingDetected",
    "build_generator",
    "check_condition",
    "decompose",
    "functional_derivative",
    "make_rhs",
    "nonlinearity_split",
    "recompose",
    "run",
]
