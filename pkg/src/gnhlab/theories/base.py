"""Shared container for a discretized theory."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .._jax import jax, jnp
from ..constraints import AmbientSystem, PresymplecticSystem
from ..core import BlockLayout, StateVector, as_coords
from ..functions import FunctionFamily, ScalarFunction
from ..grid import Grid
from ..slicing import LapseShift, SlicingGenerator


@dataclass(frozen=True)
class TargetMetric:
    """Constant nondegenerate symmetric target-space metric g_AB."""

    g: np.ndarray

    def __post_init__(self):
        g = np.array(self.g, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("target metric must be square")
        if not np.allclose(g, g.T, rtol=0, atol=1e-14):
            raise ValueError("target metric must be symmetric")
        if abs(np.linalg.det(g)) < 1e-12:
            raise ValueError("target metric is degenerate")
        g.flags.writeable = False
        object.__setattr__(self, "g", g)

    @classmethod
    def minkowski(cls, dim: int) -> "TargetMetric":
        return cls(np.diag([-1.0] + [1.0] * (dim - 1)))

    @classmethod
    def euclidean(cls, dim: int) -> "TargetMetric":
        return cls(np.eye(dim))

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.g)

    @property
    def lorentzian(self) -> bool:
        return int(np.sum(np.linalg.eigvalsh(self.g) < 0)) == 1


GeneratorArgs = tuple  # (zeta0, zeta, chi) as arrays


@dataclass
class TheorySpec:
    """Everything needed to analyze and evolve one theory.

    The traceable functions take flat coordinates followed by the generator
    arguments ``(zeta0, zeta, chi)`` so that one compiled function serves
    every slicing generator.
    """

    name: str
    layout: BlockLayout
    system: PresymplecticSystem
    generator: SlicingGenerator
    hamiltonian_fn: Callable
    rhs_fn: Callable
    energy_momentum_fn: Callable | None
    momentum_map_fn: Callable | None
    ambient: AmbientSystem | None
    oracle_secondaries: list[FunctionFamily]
    observables: dict[str, Callable[[np.ndarray], float]]
    invariants: Callable[[np.ndarray], np.ndarray]
    sample_state: Callable[[np.random.Generator], np.ndarray]
    sample_on_shell: Callable[[np.random.Generator], np.ndarray]
    grid: Grid | None = None
    lapse_shift: LapseShift | None = None
    config: dict = field(default_factory=dict)
    kinematic_blocks: tuple[str, ...] = ()
    scale_fn: Callable[[np.ndarray], float] | None = None

    def __post_init__(self):
        self._h = jax.jit(self.hamiltonian_fn)
        self._rhs = jax.jit(self.rhs_fn)
        self._em = jax.jit(self.energy_momentum_fn) if self.energy_momentum_fn else None
        self._mm = jax.jit(self.momentum_map_fn) if self.momentum_map_fn else None

    # -- generator handling ---------------------------------------------------
    @property
    def nodes(self) -> int:
        return self.grid.nodes if self.grid is not None else 1

    def generator_args(self, zg: SlicingGenerator | None = None) -> GeneratorArgs:
        zg = self.generator if zg is None else zg
        chi = np.broadcast_to(np.asarray(zg.chi, dtype=float), (self.nodes,)).copy()
        return jnp.asarray(zg.zeta0), jnp.asarray(zg.zeta), jnp.asarray(chi)

    # -- evaluation -------------------------------------------------------------
    def hamiltonian(self, p, zg: SlicingGenerator | None = None) -> float:
        return float(self._h(as_coords(p), *self.generator_args(zg)))

    def rhs(self, p, zg: SlicingGenerator | None = None) -> np.ndarray:
        return np.asarray(self._rhs(as_coords(p), *self.generator_args(zg)))

    def rhs_callable(self, zg: SlicingGenerator | None = None) -> Callable[[np.ndarray], np.ndarray]:
        args = self.generator_args(zg)
        return lambda x: np.asarray(self._rhs(x, *args))

    def energy_momentum(self, p, zg: SlicingGenerator) -> float:
        if self._em is None:
            raise NotImplementedError(f"{self.name} has no energy-momentum map")
        return float(self._em(as_coords(p), *self.generator_args(zg)))

    def momentum_map(self, p, zg: SlicingGenerator) -> float:
        if self._mm is None:
            raise NotImplementedError(f"{self.name} has no momentum map")
        if zg.zeta0 != 0.0:
            raise ValueError("the momentum map takes tangent generators only (zeta0 = 0)")
        return float(self._mm(as_coords(p), *self.generator_args(zg)))

    def scale(self, p) -> float:
        """Magnitude used to turn absolute defects into relative ones."""
        x = as_coords(p)
        if self.scale_fn is not None:
            return float(self.scale_fn(x))
        return float(max(1.0, np.dot(x, x)))

    def state(self, coords) -> StateVector:
        return StateVector(coords, self.layout)

    def observe(self, p) -> dict[str, float]:
        x = as_coords(p)
        return {k: float(f(x)) for k, f in self.observables.items()}

    def constraint_families(self) -> list[FunctionFamily]:
        """Chart primary families followed by the oracle secondaries, without repeats."""
        fams: list[FunctionFamily] = []
        for fam in [r.fn.family for r in self.system.primaries] + list(self.oracle_secondaries):
            if all(fam is not f for f in fams):
                fams.append(fam)
        return fams

    def constraint_max(self, p) -> dict[str, float]:
        x = as_coords(p)
        return {f"{fam.label}_max": float(np.max(np.abs(fam.values(x)))) for fam in self.constraint_families()}

    def hamiltonian_function(self, zg: SlicingGenerator | None = None) -> ScalarFunction:
        args = self.generator_args(zg)
        return ScalarFunction.from_callable(lambda x: self.hamiltonian_fn(x, *args), "H")


def coordinate_labeler(layout: BlockLayout, components: dict[str, list[str]], node_labels: list[str] | None):
    """Index -> (coordinate name, node label) for naming generated constraints."""

    def label(i: int) -> tuple[str, str | None]:
        block, node, comp = layout.locate(i)
        names = components.get(block)
        coord = names[comp] if names else (block if layout.block(block).components == 1 else f"{block}{comp}")
        return coord, (node_labels[node] if node_labels is not None else None)

    return label


def nodal_family(fn: Callable, label: str, node_labels: list[str]) -> FunctionFamily:
    """Family with one member per node named ``label@node``."""
    return FunctionFamily(fn, [f"{label}@{n}" for n in node_labels], node_labels, label=label)
