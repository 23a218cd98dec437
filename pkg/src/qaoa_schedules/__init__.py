"""Learned schedules for a modified QAOA ansatz on MAX-SAT, with toy models."""

__version__ = "0.1.0"

from .problems import SatInstance, build_diagonal, ground_states, ising_diagonal, sat2_to_ising
from .schedules import FreezeMask, Schedule, builtin_learned, initial_schedule, linear_anneal, resolve_schedule
from .simulator import DiagonalEnergy, StateVector, TrotterConfig, run_schedule, squared_overlap

__all__ = [
    "DiagonalEnergy",
    "FreezeMask",
    "SatInstance",
    "Schedule",
    "StateVector",
    "TrotterConfig",
    "build_diagonal",
    "builtin_learned",
    "ground_states",
    "initial_schedule",
    "ising_diagonal",
    "linear_anneal",
    "resolve_schedule",
    "run_schedule",
    "sat2_to_ising",
    "squared_overlap",
]
