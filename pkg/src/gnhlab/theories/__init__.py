"""Discretized field theories packaged for the constraint algorithm."""

from . import chern_simons, maxwell, particle, string
from .base import TargetMetric, TheorySpec
from .duality import energy_momentum_vs_hamiltonian, tangent_energy_momentum

BUILDERS = {
    "particle": particle.build,
    "maxwell": maxwell.build,
    "chern_simons": chern_simons.build,
    "string": string.build,
}

__all__ = ["BUILDERS", "TargetMetric", "TheorySpec", "chern_simons", "energy_momentum_vs_hamiltonian",
           "maxwell", "particle", "string", "tangent_energy_momentum"]
