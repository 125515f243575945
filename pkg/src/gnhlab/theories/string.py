"""Bosonic string on a periodic 1D grid in a flat target space.

Chart blocks: ``phi`` (target coordinates), ``pi`` (momenta) and ``h`` (the
worldsheet metric components h00, h01, h11) per node.  The form is
dx * d phi ^ d pi, so the h directions span its kernel; the ambient space
adds momenta ``rho`` conjugate to h with primary constraints rho = 0.
"""

from __future__ import annotations

import warnings

import numpy as np

from .._jax import jnp
from ..constraints import AmbientSystem, PresymplecticSystem, declared, project_to_constraints
from ..core import BlockLayout, TwoFormField, canonical_form
from ..functions import FunctionFamily
from ..grid import Grid
from ..slicing import LapseShift, SignatureError, SlicingGenerator
from .base import TargetMetric, TheorySpec, coordinate_labeler, nodal_family
from .maxwell import block_pairs

DEFAULTS = {"nodes": 8, "spacing": 1.0, "target_dim": 2}


def metric_from_lapse_shift(ls: LapseShift) -> np.ndarray:
    """(h00, h01, h11) = (M_1 M^1 - N^2, M_1, gamma) for a 1D slice."""
    gamma = float(np.asarray(ls.gamma).reshape(-1)[0])
    M = float(np.asarray(ls.M).reshape(-1)[0])
    return np.array([gamma * M * M - float(ls.N) ** 2, gamma * M, gamma])


def check_worldsheet_metric(h: np.ndarray) -> None:
    h = np.asarray(h).reshape(-1, 3)
    if np.any(h[:, 2] <= 0) or np.any(h[:, 0] * h[:, 2] - h[:, 1] ** 2 >= 0):
        raise SignatureError("worldsheet metric must be Lorentzian with a spacelike slice")


def build(grid: Grid | None = None, target: TargetMetric | None = None, lapse_shift: LapseShift | None = None,
          h=None, generator: SlicingGenerator | None = None, seeds: int = 3, rng_seed: int = 0,
          perturbation: float = 1e-2) -> TheorySpec:
    grid = grid or Grid(1, DEFAULTS["nodes"], DEFAULTS["spacing"])
    if grid.spatial_dim != 1:
        raise ValueError("the string needs a 1D grid")
    target = target or TargetMetric.minkowski(DEFAULTS["target_dim"])
    if not target.lorentzian:
        warnings.warn("non-Lorentzian target: the final constraint set is only the trivial sector", stacklevel=2)
    zg = generator or SlicingGenerator(1.0, np.zeros(1), 0.0)
    nodes, d, dx = grid.nodes, target.dim, grid.spacing
    labels = grid.node_labels()
    if h is None:
        h = metric_from_lapse_shift(lapse_shift or LapseShift(1.0, np.zeros(1), np.eye(1)))
    h0 = np.broadcast_to(np.asarray(h, dtype=float), (nodes, 3)).copy()
    check_worldsheet_metric(h0)
    g = jnp.asarray(target.g)
    ginv = jnp.asarray(target.inverse)

    layout = BlockLayout([("phi", nodes, d), ("pi", nodes, d), ("h", nodes, 3)])
    omega = TwoFormField(matrix=canonical_form(block_pairs(layout, "phi", "pi", [(a, a) for a in range(d)]),
                                               layout.total_dim, dx))

    def unpack(x):
        return layout.view(x, "phi"), layout.view(x, "pi"), layout.view(x, "h")

    def densities(x):
        phi, pi, _ = unpack(x)
        dphi = grid.diff(phi, 0)
        sh = jnp.einsum("na,ab,nb->n", pi, ginv, pi) + jnp.einsum("na,ab,nb->n", dphi, g, dphi)
        sm = jnp.sum(pi * dphi, axis=1)
        return sh, sm

    def multipliers(hm, zeta0, zeta):
        """zeta0 N / (2 sqrt gamma) and zeta0 M + zeta^1 from the worldsheet metric."""
        a = zeta0 * jnp.sqrt(hm[:, 1] ** 2 - hm[:, 0] * hm[:, 2]) / (2.0 * hm[:, 2])
        b = zeta0 * hm[:, 1] / hm[:, 2] + zeta[0]
        return a, b

    def hamiltonian(x, zeta0, zeta, chi):
        sh, sm = densities(x)
        a, b = multipliers(unpack(x)[2], zeta0, zeta)
        return dx * jnp.sum(a * sh + b * sm)

    def rhs(x, zeta0, zeta, chi):
        phi, pi, hm = unpack(x)
        a, b = multipliers(hm, zeta0, zeta)
        dphi = grid.diff(phi, 0)
        vphi = 2.0 * a[:, None] * pi @ ginv + b[:, None] * dphi
        vpi = 2.0 * grid.diff(a[:, None] * dphi @ g, 0) + grid.diff(b[:, None] * pi, 0)
        return jnp.concatenate([vphi.reshape(-1), vpi.reshape(-1), jnp.zeros(3 * nodes)])

    def energy_momentum(x, xi0, xi, chi):
        # written with the inverse worldsheet metric h^{ab}
        sh, sm = densities(x)
        hm = unpack(x)[2]
        det = hm[:, 0] * hm[:, 2] - hm[:, 1] ** 2
        h00_up, h01_up = hm[:, 2] / det, -hm[:, 1] / det
        dens = 0.5 / jnp.sqrt(-det) / h00_up * xi0 * sh + (h01_up / h00_up * xi0 - xi[0]) * sm
        return dx * jnp.sum(dens)

    def momentum_map(x, xi0, xi, chi):
        return -dx * xi[0] * jnp.sum(densities(x)[1])

    superham = nodal_family(lambda x: densities(x)[0], "superham", labels)
    supermom = nodal_family(lambda x: densities(x)[1], "supermom", labels)

    def total_momentum(x):
        return dx * np.asarray(layout.view(x, "pi")).sum(axis=0)

    def sample_state(rng):
        hm = h0 + 0.1 * rng.uniform(-1, 1, size=(nodes, 3))
        return layout.assemble(phi=rng.normal(size=(nodes, d)), pi=rng.normal(size=(nodes, d)), h=hm)

    def aligned(rng, hm):
        """A point where pi +- g D phi are null and aligned with fixed null covectors."""
        if not target.lorentzian:
            return layout.assemble(phi=np.tile(rng.normal(size=d), (nodes, 1)), h=hm)
        ev, vecs = np.linalg.eigh(target.inverse)
        t, s = vecs[:, 0], vecs[:, 1]
        lp = t / np.sqrt(-ev[0]) + s / np.sqrt(ev[1])
        lm = t / np.sqrt(-ev[0]) - s / np.sqrt(ev[1])
        D = grid.difference_matrix(0)
        u = D @ rng.normal(size=nodes)
        w = D @ rng.normal(size=nodes)
        Pp, Pm = u[:, None] * lp, w[:, None] * lm
        pi = 0.5 * (Pp + Pm)
        dphi = 0.5 * (Pp - Pm) @ np.asarray(ginv)
        phi = np.linalg.lstsq(D, dphi, rcond=None)[0] + rng.normal(size=d)
        return layout.assemble(phi=phi, pi=pi, h=hm)

    def sample_on_shell(rng):
        hm = h0 + 0.1 * rng.uniform(-1, 1, size=(nodes, 3))
        x = aligned(rng, hm)
        return project_to_constraints(x, declared(superham) + declared(supermom), 1e-13)

    rng = np.random.default_rng(rng_seed)
    seed_points = []
    for _ in range(seeds):
        hm = h0 + 0.1 * rng.uniform(-1, 1, size=(nodes, 3))
        x = aligned(rng, hm)
        x[:layout.block("h").offset] += perturbation * rng.normal(size=layout.block("h").offset)
        seed_points.append(x)

    comps = {"phi": [f"phi{a}" for a in range(d)], "pi": [f"pi{a}" for a in range(d)],
             "h": ["h00", "h01", "h11"]}
    spec = TheorySpec(
        name="string", layout=layout, system=None, generator=zg,
        hamiltonian_fn=hamiltonian, rhs_fn=rhs, energy_momentum_fn=energy_momentum,
        momentum_map_fn=momentum_map, ambient=_ambient(layout, nodes, labels, dx),
        oracle_secondaries=[superham, supermom], observables={}, invariants=total_momentum,
        sample_state=sample_state, sample_on_shell=sample_on_shell, grid=grid,
        lapse_shift=lapse_shift, config={"nodes": nodes, "spacing": dx, "target": target.g.tolist()},
        kinematic_blocks=("h",))
    spec.target = target
    spec.system = PresymplecticSystem(layout, omega, spec.hamiltonian_function(), [], seed_points,
                                      coordinate_labeler(layout, comps, labels))
    obs = {"H": lambda x: spec.hamiltonian(x)}
    for a in range(d):
        obs[f"P{a}"] = lambda x, a=a: float(total_momentum(x)[a])
    spec.observables = obs
    return spec


def _ambient(chart: BlockLayout, nodes: int, labels: list[str], dx: float) -> AmbientSystem:
    d = chart.block("phi").components
    layout = BlockLayout([("phi", nodes, d), ("pi", nodes, d), ("h", nodes, 3), ("rho", nodes, 3)])
    pairs = block_pairs(layout, "phi", "pi", [(a, a) for a in range(d)])
    pairs += block_pairs(layout, "h", "rho", [(m, m) for m in range(3)])
    omega = TwoFormField(matrix=canonical_form(pairs, layout.total_dim, dx))
    names = [f"rho{c}@{n}" for n in labels for c in ("00", "01", "11")]
    family = FunctionFamily(lambda y: layout.view(y, "rho").reshape(-1), names,
                            [n for n in labels for _ in range(3)], label="rho")
    n_chart = chart.total_dim

    def embed(x):
        return np.concatenate([np.asarray(x), np.zeros(3 * nodes)])

    def restrict(y):
        return y[:n_chart]

    return AmbientSystem(layout, omega, declared(family, 1, ambient=True), embed, restrict)
