"""Lattice electromagnetism on a periodic 3D grid with a static background metric.

Chart blocks: ``A`` (A_0..A_3 per node) and ``E`` (the electric field
density E^1..E^3, the negative of the physical electric field density).
The presymplectic form is dx^3 * sum_i dA_i ^ dE^i, so A_0 spans its kernel.
"""

from __future__ import annotations

import numpy as np

from .._jax import jnp
from ..constraints import AmbientSystem, PresymplecticSystem, declared
from ..core import BlockLayout, TwoFormField, canonical_form
from ..functions import FunctionFamily
from ..grid import Grid
from ..slicing import LapseShift, SlicingGenerator
from .base import TheorySpec, coordinate_labeler, nodal_family

DEFAULTS = {"nodes_per_dim": 3, "spacing": 1.0, "seeds": 3, "rng_seed": 0}


def block_pairs(layout: BlockLayout, a: str, b: str, comps: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """(index in a, index in b) for every node and every component pair."""
    n = layout.block(a).node_count
    return [(layout.index(a, k, ca), layout.index(b, k, cb)) for k in range(n) for ca, cb in comps]


class _Fields:
    """Traceable field algebra shared by H, RHS and the energy-momentum map."""

    def __init__(self, grid: Grid, ls: LapseShift):
        self.grid = grid
        self.N = float(ls.N)
        self.gamma = np.array(ls.gamma)
        self.ginv = np.linalg.inv(self.gamma)
        self.sqrtg = float(np.sqrt(np.linalg.det(self.gamma)))
        self.M = np.array(ls.M)

    def split(self, layout: BlockLayout, x):
        return layout.view(x, "A"), layout.view(x, "E")

    def field_strength(self, Aspatial):
        """F[:, i, j] = D_i A_j - D_j A_i (spatial indices 0..2)."""
        dA = jnp.stack([self.grid.diff(Aspatial, i) for i in range(3)], axis=1)  # [node, i, j] = D_i A_j
        return dA - jnp.swapaxes(dA, 1, 2)

    def raised(self, F):
        """gamma^{ik} gamma^{jm} F_km."""
        return jnp.einsum("ik,jm,nkm->nij", self.ginv, self.ginv, F)

    def effective(self, zeta0, zeta):
        return zeta0 * self.N, zeta0 * jnp.asarray(self.M) + zeta


def build(grid: Grid | None = None, lapse_shift: LapseShift | None = None,
          generator: SlicingGenerator | None = None, seeds: int = 3, rng_seed: int = 0) -> TheorySpec:
    grid = grid or Grid(3, DEFAULTS["nodes_per_dim"], DEFAULTS["spacing"])
    if grid.spatial_dim != 3:
        raise ValueError("Maxwell needs a 3D grid")
    ls = lapse_shift or LapseShift.minkowski(3)
    if np.ndim(ls.N) != 0:
        raise ValueError("Maxwell uses a constant (static) lapse and shift")
    zg = generator or SlicingGenerator(1.0, np.zeros(3), 0.0)
    nodes, dv = grid.nodes, grid.cell_volume
    labels = grid.node_labels()
    layout = BlockLayout([("A", nodes, 4), ("E", nodes, 3)])
    fld = _Fields(grid, ls)
    gamma = jnp.asarray(fld.gamma)

    omega = TwoFormField(matrix=canonical_form(block_pairs(layout, "A", "E", [(1, 0), (2, 1), (3, 2)]),
                                               layout.total_dim, dv))

    def hamiltonian(x, zeta0, zeta, chi):
        A, E = fld.split(layout, x)
        c, v = fld.effective(zeta0, zeta)
        F = fld.field_strength(A[:, 1:])
        u = zeta0 * A[:, 0] + A[:, 1:] @ zeta - chi
        dens = (0.5 * c / fld.sqrtg * jnp.einsum("ij,ni,nj->n", gamma, E, E)
                + 0.25 * c * fld.sqrtg * jnp.einsum("nij,nij->n", fld.raised(F), F)
                + jnp.einsum("i,nij,nj->n", v, F, E)
                + jnp.sum(grid.gradient(u) * E, axis=1))
        return dv * jnp.sum(dens)

    def rhs(x, zeta0, zeta, chi):
        A, E = fld.split(layout, x)
        c, v = fld.effective(zeta0, zeta)
        F = fld.field_strength(A[:, 1:])
        u = zeta0 * A[:, 0] + A[:, 1:] @ zeta - chi
        dA = (c / fld.sqrtg * E @ gamma + jnp.einsum("k,nki->ni", v, F) + grid.gradient(u))
        G = c * fld.sqrtg * fld.raised(F)  # G[n, j, i] paired with D_j
        flux = G + jnp.einsum("j,ni->nji", v, E) - jnp.einsum("i,nj->nji", v, E)
        dE = sum(grid.diff(flux[:, j, :], j) for j in range(3))
        return jnp.concatenate([jnp.concatenate([jnp.zeros((nodes, 1)), dA], axis=1).reshape(-1),
                                dE.reshape(-1)])

    def energy_momentum(x, xi0, xi, chi):
        # densitized field strength N sqrt(gamma) F and shift-adjusted generator
        A, E = fld.split(layout, x)
        Fd = fld.N * fld.sqrtg * fld.field_strength(A[:, 1:])
        v = xi0 * jnp.asarray(fld.M) + xi
        w = chi - xi0 * A[:, 0] - A[:, 1:] @ xi
        gauge = jnp.sum(E * grid.gradient(w), axis=1)
        shift = jnp.einsum("i,nj,nij->n", v, E, Fd) / (fld.N * fld.sqrtg)
        energy = xi0 * fld.N / fld.sqrtg * (0.5 * jnp.einsum("ij,ni,nj->n", gamma, E, E)
                                            + 0.25 / fld.N**2 * jnp.einsum("nij,nij->n", fld.raised(Fd), Fd))
        return dv * jnp.sum(gauge - shift - energy)

    def momentum_map(x, xi0, xi, chi):
        A, E = fld.split(layout, x)
        dAj = jnp.stack([grid.diff(A[:, 1:], k) for k in range(3)], axis=1)  # [node, k, j] = D_k A_j
        return dv * jnp.sum(jnp.sum(E * grid.gradient(chi), axis=1) - jnp.einsum("k,nj,nkj->n", xi, E, dAj))

    def gauss(x):
        return grid.divergence(layout.view(x, "E"))

    gauss_family = nodal_family(gauss, "gauss", labels)

    def field_energy(x):
        A, E = layout.view(x, "A"), layout.view(x, "E")
        F = fld.field_strength(A[:, 1:])
        return dv * jnp.sum(0.5 * jnp.sum(E**2, axis=1) + 0.25 * jnp.sum(F**2, axis=(1, 2)))

    field_energy_fn = FunctionFamily(lambda x: jnp.reshape(field_energy(x), (1,)), ["field_energy"])

    def invariants(x):
        A, E = layout.view(x, "A"), layout.view(x, "E")
        F = np.asarray(fld.field_strength(jnp.asarray(A[:, 1:])))
        return np.concatenate([F.reshape(-1), np.asarray(E).reshape(-1)])

    def sample_state(rng):
        return rng.normal(size=layout.total_dim)

    def sample_on_shell(rng):
        """Random A and a divergence-free E (a discrete curl, exact on the periodic grid)."""
        B = rng.normal(size=(nodes, 3))
        E = np.stack([grid.diff(B[:, (i + 2) % 3], (i + 1) % 3) - grid.diff(B[:, (i + 1) % 3], (i + 2) % 3)
                      for i in range(3)], axis=1)
        return layout.assemble(A=rng.normal(size=(nodes, 4)), E=E)

    rng = np.random.default_rng(rng_seed)
    seed_points = [layout.assemble(A=rng.normal(size=(nodes, 4)), E=rng.normal(size=(nodes, 3)))
                   for _ in range(seeds)]

    comps = {"A": ["A0", "A1", "A2", "A3"], "E": ["E1", "E2", "E3"]}
    spec = TheorySpec(
        name="maxwell", layout=layout, system=None, generator=zg,  # system filled below
        hamiltonian_fn=hamiltonian, rhs_fn=rhs, energy_momentum_fn=energy_momentum,
        momentum_map_fn=momentum_map, ambient=_ambient(layout, nodes, labels, dv),
        oracle_secondaries=[gauss_family], observables={}, invariants=invariants,
        sample_state=sample_state, sample_on_shell=sample_on_shell, grid=grid, lapse_shift=ls,
        config={"nodes_per_dim": grid.nodes_per_dim, "spacing": grid.spacing},
        kinematic_blocks=("A0",))
    spec.system = PresymplecticSystem(layout, omega, spec.hamiltonian_function(), [], seed_points,
                                      coordinate_labeler(layout, comps, labels))
    spec.observables = {
        "H": lambda x: spec.hamiltonian(x),
        "field_energy": lambda x: float(field_energy_fn.values(x)[0]),
    }
    return spec


def _ambient(chart: BlockLayout, nodes: int, labels: list[str], dv: float) -> AmbientSystem:
    """(A_mu, E^nu) with the canonical form; the primary constraint is E^0 = 0."""
    layout = BlockLayout([("A", nodes, 4), ("E", nodes, 4)])
    omega = TwoFormField(matrix=canonical_form(block_pairs(layout, "A", "E", [(m, m) for m in range(4)]),
                                               layout.total_dim, dv))
    primary = nodal_family(lambda y: layout.view(y, "E")[:, 0], "E0", labels)

    def embed(x):
        A, E = chart.view(x, "A"), chart.view(x, "E")
        return layout.assemble(A=A, E=np.concatenate([np.zeros((nodes, 1)), E], axis=1))

    def restrict(y):
        A, E = layout.view(y, "A"), layout.view(y, "E")
        return jnp.concatenate([A.reshape(-1), E[:, 1:].reshape(-1)])

    return AmbientSystem(layout, omega, declared(primary, 1, ambient=True), embed, restrict)
