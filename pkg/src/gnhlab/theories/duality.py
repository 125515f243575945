"""Energy-momentum versus Hamiltonian comparisons."""

from __future__ import annotations

from ..slicing import SlicingGenerator
from .base import TheorySpec


def energy_momentum_vs_hamiltonian(theory: TheorySpec, p, zg: SlicingGenerator) -> float:
    """<E(p), (zeta, chi)> + H_zeta(p); zero when E pairs to -H."""
    if zg.zeta0 == 0.0:
        raise ValueError("the comparison needs a transverse generator (zeta0 != 0)")
    return theory.energy_momentum(p, zg) + theory.hamiltonian(p, zg)


def tangent_energy_momentum(theory: TheorySpec, p, zg: SlicingGenerator) -> tuple[float, float]:
    """(<E(p), (zeta, chi)>, <J(p), (zeta, chi)>) for a tangent generator."""
    if zg.zeta0 != 0.0:
        raise ValueError("tangent generators have zeta0 = 0")
    return theory.energy_momentum(p, zg), theory.momentum_map(p, zg)
