"""Relativistic free particle in a flat target space.

Blocks ``q`` and ``pi`` (one node, ``dim`` components each) with the
canonical form.  The generator components (zeta0, zeta) are read as a
constant target-space vector zeta^A.
"""

from __future__ import annotations

import numpy as np

from .._jax import jnp
from ..constraints import PresymplecticSystem, declared
from ..core import BlockLayout, TwoFormField, canonical_form
from ..functions import FunctionFamily
from ..slicing import SlicingGenerator
from .base import TargetMetric, TheorySpec, coordinate_labeler


def build(dim: int = 4, m: float = 1.0, target: TargetMetric | None = None,
          generator: SlicingGenerator | None = None, k: float | None = None, seeds: int = 3,
          rng_seed: int = 0) -> TheorySpec:
    if m <= 0:
        raise ValueError("mass must be positive")
    target = target or TargetMetric.minkowski(dim)
    if target.dim != dim:
        raise ValueError("target metric dimension does not match dim")
    if not target.lorentzian:
        raise ValueError("the mass shell needs a Lorentzian target metric")
    zg = generator or SlicingGenerator(0.0, np.zeros(dim - 1), 0.0)
    if zg.zeta.shape[0] != dim - 1:
        raise ValueError(f"generator needs {dim - 1} spatial components")
    k = 1.0 / (2.0 * m) if k is None else float(k)
    ginv = jnp.asarray(target.inverse)
    layout = BlockLayout([("q", 1, dim), ("pi", 1, dim)])
    omega = TwoFormField(matrix=canonical_form([(a, dim + a) for a in range(dim)], 2 * dim))

    def vector(zeta0, zeta):
        return jnp.concatenate([jnp.reshape(zeta0, (1,)), zeta])

    def hamiltonian(x, zeta0, zeta, chi):
        return -jnp.dot(vector(zeta0, zeta), x[dim:])

    def rhs(x, zeta0, zeta, chi):
        return jnp.concatenate([-vector(zeta0, zeta) + 2.0 * k * ginv @ x[dim:], jnp.zeros(dim)])

    def energy_momentum(x, xi0, xi, chi):
        return 0.0 * jnp.sum(x)

    mass_shell = FunctionFamily(lambda x: jnp.reshape(x[dim:] @ ginv @ x[dim:] + m * m, (1,)), ["mass_shell"],
                                label="mass_shell")

    def impact(x):
        """Component of q orthogonal (Euclidean) to the velocity direction g^-1 pi."""
        q, u = x[:dim], np.asarray(ginv) @ x[dim:]
        return q - (q @ u) / (u @ u) * u

    def invariants(x):
        return np.concatenate([impact(x), x[dim:]])

    def on_shell_momentum(rng):
        """Random pi with g^{AB} pi_A pi_B = -m^2, built in the eigenbasis of g^-1."""
        ev, vecs = np.linalg.eigh(np.asarray(ginv))
        c = rng.normal(size=dim)
        c[0] = np.sqrt((m * m + np.sum(ev[1:] * c[1:] ** 2)) / -ev[0])
        return vecs @ c

    def sample_state(rng):
        return np.concatenate([rng.normal(size=dim), rng.normal(size=dim)])

    def sample_on_shell(rng):
        return np.concatenate([rng.normal(size=dim), on_shell_momentum(rng)])

    rng = np.random.default_rng(rng_seed)
    seed_points = [np.concatenate([rng.normal(size=dim), on_shell_momentum(rng) * (1 + 0.05 * rng.normal())])
                   for _ in range(seeds)]

    spec = TheorySpec(
        name="particle", layout=layout, system=None, generator=zg,
        hamiltonian_fn=hamiltonian, rhs_fn=rhs, energy_momentum_fn=energy_momentum, momentum_map_fn=None,
        ambient=None, oracle_secondaries=[], observables={}, invariants=invariants,
        sample_state=sample_state, sample_on_shell=sample_on_shell,
        config={"dim": dim, "m": m, "k": k, "target": target.g.tolist()})
    spec.target = target
    spec.mass_shell = mass_shell
    labels = {"q": [f"q{a}" for a in range(dim)], "pi": [f"pi{a}" for a in range(dim)]}
    spec.system = PresymplecticSystem(layout, omega, spec.hamiltonian_function(), declared(mass_shell),
                                      seed_points, coordinate_labeler(layout, labels, None))
    obs = {"H": lambda x: spec.hamiltonian(x), "worldline_offset": lambda x: float(np.linalg.norm(impact(x)))}
    for a in range(dim):
        obs[f"pi{a}"] = lambda x, a=a: float(x[dim + a])
    spec.observables = obs
    return spec
