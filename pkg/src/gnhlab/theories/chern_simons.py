"""Abelian Chern-Simons theory on a periodic 2D grid.

Chart block ``A`` holds (A_0, A_1, A_2) per node with presymplectic form
2 dx^2 dA_1 ^ dA_2.  The ambient space (A_mu, pi^nu) carries the canonical form
and the primary constraints pi^0 = 0, pi^1 - A_2 = 0, pi^2 + A_1 = 0.
"""

from __future__ import annotations

import numpy as np

from .._jax import jnp
from ..constraints import AmbientSystem, PresymplecticSystem, declared
from ..core import BlockLayout, TwoFormField, canonical_form
from ..functions import FunctionFamily
from ..grid import Grid
from ..slicing import SlicingGenerator
from .base import TheorySpec, coordinate_labeler, nodal_family
from .maxwell import block_pairs

DEFAULTS = {"nodes_per_dim": 3, "spacing": 1.0}


def build(grid: Grid | None = None, generator: SlicingGenerator | None = None, seeds: int = 3,
          rng_seed: int = 0) -> TheorySpec:
    grid = grid or Grid(2, DEFAULTS["nodes_per_dim"], DEFAULTS["spacing"])
    if grid.spatial_dim != 2:
        raise ValueError("Chern-Simons needs a 2D grid")
    zg = generator or SlicingGenerator(1.0, np.zeros(2), 0.0)
    nodes, da = grid.nodes, grid.cell_volume
    labels = grid.node_labels()
    layout = BlockLayout([("A", nodes, 3)])
    omega = TwoFormField(matrix=canonical_form([(layout.index("A", k, 1), layout.index("A", k, 2))
                                                for k in range(nodes)], layout.total_dim, 2.0 * da))

    def curvature(A):
        return grid.diff(A[:, 2], 0) - grid.diff(A[:, 1], 1)

    def contracted(A, zeta0, zeta):
        return zeta0 * A[:, 0] + A[:, 1:] @ zeta

    def hamiltonian(x, zeta0, zeta, chi):
        A = layout.view(x, "A")
        u = contracted(A, zeta0, zeta)
        dens = -u * curvature(A) + grid.diff(u, 0) * A[:, 2] - grid.diff(u, 1) * A[:, 1]
        return da * jnp.sum(dens)

    def rhs(x, zeta0, zeta, chi):
        A = layout.view(x, "A")
        u = contracted(A, zeta0, zeta)
        dA = jnp.stack([jnp.zeros(nodes), grid.diff(u, 0), grid.diff(u, 1)], axis=1)
        return dA.reshape(-1)

    def energy_momentum(x, xi0, xi, chi):
        A = layout.view(x, "A")
        w = chi - contracted(A, xi0, xi)
        F = curvature(A)
        # epsilon^{0ij} (A_j D_i w + A_j F_ik xi^k + A_0 F_ij xi^0 / 2)
        dens = (A[:, 2] * grid.diff(w, 0) - A[:, 1] * grid.diff(w, 1)
                + F * (A[:, 2] * xi[1] + A[:, 1] * xi[0]) + A[:, 0] * F * xi0)
        return da * jnp.sum(dens)

    flatness = nodal_family(lambda x: curvature(layout.view(x, "A")), "F12", labels)

    def wilson(x):
        A = grid.spacing * np.asarray(layout.view(x, "A")).reshape(grid.shape + (3,))
        return np.concatenate([A[:, :, 1].sum(axis=0), A[:, :, 2].sum(axis=1)])

    def sample_state(rng):
        return rng.normal(size=layout.total_dim)

    def sample_on_shell(rng):
        """Pure gauge plus a constant (holonomy-carrying) connection: exactly flat."""
        phi = rng.normal(size=nodes)
        A = np.stack([rng.normal(size=nodes), grid.diff(phi, 0) + rng.normal(),
                      grid.diff(phi, 1) + rng.normal()], axis=1)
        return layout.assemble(A=A)

    rng = np.random.default_rng(rng_seed)
    seed_points = [rng.normal(size=layout.total_dim) for _ in range(seeds)]

    spec = TheorySpec(
        name="chern_simons", layout=layout, system=None, generator=zg,
        hamiltonian_fn=hamiltonian, rhs_fn=rhs, energy_momentum_fn=energy_momentum, momentum_map_fn=None,
        ambient=_ambient(layout, nodes, labels, da), oracle_secondaries=[flatness], observables={},
        invariants=wilson, sample_state=sample_state, sample_on_shell=sample_on_shell, grid=grid,
        config={"nodes_per_dim": grid.nodes_per_dim, "spacing": grid.spacing}, kinematic_blocks=("A0",))
    spec.system = PresymplecticSystem(layout, omega, spec.hamiltonian_function(), [], seed_points,
                                      coordinate_labeler(layout, {"A": ["A0", "A1", "A2"]}, labels))
    obs = {"H": lambda x: spec.hamiltonian(x)}
    n = grid.nodes_per_dim
    for k in range(n):
        obs[f"W1_{k}"] = lambda x, k=k: float(wilson(x)[k])
    for k in range(n):
        obs[f"W2_{k}"] = lambda x, k=k: float(wilson(x)[n + k])
    spec.observables = obs
    return spec


def _ambient(chart: BlockLayout, nodes: int, labels: list[str], da: float) -> AmbientSystem:
    layout = BlockLayout([("A", nodes, 3), ("pi", nodes, 3)])
    omega = TwoFormField(matrix=canonical_form(block_pairs(layout, "A", "pi", [(m, m) for m in range(3)]),
                                               layout.total_dim, da))

    def primaries(y):
        A, pi = layout.view(y, "A"), layout.view(y, "pi")
        return jnp.concatenate([pi[:, 0], pi[:, 1] - A[:, 2], pi[:, 2] + A[:, 1]])

    names = ([f"pi0@{n}" for n in labels] + [f"pi1-A2@{n}" for n in labels] + [f"pi2+A1@{n}" for n in labels])
    family = FunctionFamily(primaries, names, labels * 3, label="legendre")

    def embed(x):
        A = chart.view(x, "A")
        return layout.assemble(A=A, pi=np.stack([np.zeros(nodes), A[:, 2], -A[:, 1]], axis=1))

    def restrict(y):
        return layout.view(y, "A").reshape(-1)

    return AmbientSystem(layout, omega, declared(family, 1, ambient=True), embed, restrict)
