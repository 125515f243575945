"""Presymplectic constraint analysis for discretized constrained Hamiltonian theories."""

from .constraints import (ConstraintRecord, GnhReport, PresymplecticSystem, Tolerances, project_to_constraints,
                          run_gnh)
from .core import BlockLayout, StateVector, Subspace, TwoFormField, kernel, polar, solve_hamilton

__version__ = "0.1.0"

__all__ = ["BlockLayout", "ConstraintRecord", "GnhReport", "PresymplecticSystem", "StateVector", "Subspace",
           "Tolerances", "TwoFormField", "kernel", "polar", "project_to_constraints", "run_gnh",
           "solve_hamilton"]
