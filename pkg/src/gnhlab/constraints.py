"""The presymplectic constraint algorithm.

Starting from the primary set P1, level l+1 adds the functions
v . grad H for every v in the polar of T P^l taken inside T P1.  The polar
directions are recomputed at every point with a basis whose pivot pattern is
frozen at a reference point, so each generated constraint is a smooth
traceable function and its gradient is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from ._jax import jax, jnp
from .core import (EPS_RANK, BlockLayout, StateVector, Subspace, TwoFormField, _nullspace, as_coords,
                   polar)
from .functions import FunctionFamily, ScalarFunction


class ProjectionError(RuntimeError):
    """Gauss-Newton projection did not reach the constraint set."""

    def __init__(self, residual: float, iterations: int):
        super().__init__(f"projection failed after {iterations} iterations (residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class Tolerances:
    eps_rank: float = EPS_RANK
    eps_con: float = 1e-8
    fd_step: float = 1e-5
    max_iter: int = 60

    def __post_init__(self):
        if min(self.eps_rank, self.eps_con, self.fd_step) <= 0 or self.max_iter < 1:
            raise ValueError("tolerances must be positive")

    @property
    def projection_tol(self) -> float:
        return 1e-3 * self.eps_con


@dataclass
class ConstraintRecord:
    fn: ScalarFunction
    level: int
    class_tag: str = "unknown"
    provenance: str = "declared"
    dependent: bool = False
    ambient: bool = False

    @property
    def name(self) -> str:
        return self.fn.name

    @property
    def node(self) -> str | None:
        return self.fn.node


def declared(family: FunctionFamily, level: int = 1, ambient: bool = False) -> list[ConstraintRecord]:
    return [ConstraintRecord(f, level, ambient=ambient) for f in family.members()]


@dataclass
class PresymplecticSystem:
    """The data (P, omega, H) on a chart, plus primaries and seed points.

    ``labeler`` maps a coordinate index to (coordinate name, node label) and
    is used to name generated constraints.
    """

    layout: BlockLayout
    omega: TwoFormField
    hamiltonian: ScalarFunction
    primaries: list[ConstraintRecord] = field(default_factory=list)
    seed_points: list[StateVector] = field(default_factory=list)
    labeler: Callable[[int], tuple[str, str | None]] | None = None

    def label(self, i: int) -> tuple[str, str | None]:
        if self.labeler is not None:
            return self.labeler(i)
        block, node, comp = self.layout.locate(i)
        b = self.layout.block(block)
        name = block if b.components == 1 else f"{block}{comp}"
        return name, (str(node) if b.node_count > 1 else None)


@dataclass
class AmbientSystem:
    """Canonical symplectic ambient space used to classify primaries.

    ``embed`` maps chart coordinates onto the primary set; ``restrict`` is a
    traceable map from ambient to chart coordinates used to lift constraints.
    """

    layout: BlockLayout
    omega: TwoFormField
    primaries: list[ConstraintRecord]
    embed: Callable[[np.ndarray], np.ndarray]
    restrict: Callable


@dataclass
class LevelRecord:
    level: int
    new_constraints: list[ConstraintRecord]
    tangent_dim: int
    polar_dim: int
    generated: int = 0


@dataclass
class GnhReport:
    levels: list[LevelRecord]
    final_set_dim: int
    gauge_dim: int
    kinematic_dim: int
    terminated: bool
    classifications: dict[str, str]
    warnings: list[str] = field(default_factory=list)
    constraints: list[ConstraintRecord] = field(default_factory=list)
    final_points: list[StateVector] = field(default_factory=list)

    @property
    def chain_length(self) -> int:
        return len(self.levels)

    @property
    def empty_set(self) -> bool:
        return self.final_set_dim < 0

    def chart_constraints(self) -> list[ConstraintRecord]:
        return [r for r in self.constraints if not r.ambient]


# -- stacking ------------------------------------------------------------------

def _groups(records: Sequence[ConstraintRecord]):
    order: dict[int, tuple[FunctionFamily, list[int], list[int]]] = {}
    for pos, r in enumerate(records):
        fam = r.fn.family
        entry = order.setdefault(id(fam), (fam, [], []))
        entry[1].append(pos)
        entry[2].append(r.fn.index)
    return list(order.values())


def stacked_fn(records: Sequence[ConstraintRecord]) -> Callable:
    """Traceable map x -> vector of all record values, in record order."""
    groups = _groups(records)
    if not groups:
        return lambda x: jnp.zeros(0, dtype=x.dtype)
    positions = np.concatenate([np.array(g[1]) for g in groups])
    inverse = np.argsort(positions)
    index_arrays = [np.array(g[2]) for g in groups]

    def fn(x):
        parts = [g[0].fn(x)[idx] for g, idx in zip(groups, index_arrays)]
        return jnp.concatenate(parts)[inverse]

    return fn


def stacked_values(records: Sequence[ConstraintRecord], p) -> np.ndarray:
    x = as_coords(p)
    out = np.zeros(len(records))
    for fam, pos, idx in _groups(records):
        out[pos] = fam.values(x)[idx]
    return out


def stacked_jacobian(records: Sequence[ConstraintRecord], p) -> np.ndarray:
    x = as_coords(p)
    out = np.zeros((len(records), x.shape[0]))
    for fam, pos, idx in _groups(records):
        out[pos] = fam.jacobian(x)[idx]
    return out


# -- projection and tangent spaces ------------------------------------------

def project_to_constraints(p0, constraints: Sequence[ConstraintRecord], tol: float = 1e-11,
                           max_iter: int = 60, eps_rank: float = EPS_RANK):
    """Damped Gauss-Newton (minimum-norm steps) onto the common zero set."""
    x = np.array(as_coords(p0), dtype=float)
    wrap = (lambda y: StateVector(y, p0.layout)) if isinstance(p0, StateVector) else (lambda y: y)
    if not constraints:
        return wrap(x)
    c = stacked_values(constraints, x)
    for it in range(max_iter):
        if np.max(np.abs(c)) <= tol:
            return wrap(x)
        J = stacked_jacobian(constraints, x)
        step = np.linalg.lstsq(J, c, rcond=eps_rank)[0]
        norm0 = np.linalg.norm(c)
        alpha = 1.0
        while alpha > 1e-6:
            xn = x - alpha * step
            cn = stacked_values(constraints, xn)
            if np.all(np.isfinite(cn)) and np.linalg.norm(cn) < norm0:
                break
            alpha *= 0.5
        else:
            raise ProjectionError(float(np.max(np.abs(c))), it)
        x, c = xn, cn
    if np.max(np.abs(c)) <= tol:
        return wrap(x)
    raise ProjectionError(float(np.max(np.abs(c))), max_iter)


def tangent_space(p, constraints: Sequence[ConstraintRecord], eps_rank: float = EPS_RANK) -> Subspace:
    """Nullspace of the stacked constraint Jacobian at p."""
    x = as_coords(p)
    J = stacked_jacobian(constraints, x)
    return Subspace(_nullspace(J, eps_rank), x.shape[0])


# -- frozen-pivot nullspaces --------------------------------------------------

@dataclass(frozen=True)
class NullStructure:
    """Row subset and pivot/free columns fixing a smooth nullspace basis."""

    n: int
    rows: tuple[int, ...]
    pivots: tuple[int, ...]
    free: tuple[int, ...]


def choose_structure(m: np.ndarray, eps_rank: float = EPS_RANK) -> NullStructure:
    n = m.shape[1]
    if m.shape[0] == 0 or not np.any(m):
        return NullStructure(n, (), (), tuple(range(n)))
    s = np.linalg.svd(m, compute_uv=False)
    r = int(np.sum(s > eps_rank * s[0]))
    _, _, prow = scipy.linalg.qr(m.T, pivoting=True, mode="economic")
    rows = tuple(sorted(int(i) for i in prow[:r]))
    _, _, pcol = scipy.linalg.qr(m[list(rows)], pivoting=True, mode="economic")
    pivots = tuple(sorted(int(i) for i in pcol[:r]))
    free = tuple(i for i in range(n) if i not in set(pivots))
    return NullStructure(n, rows, pivots, free)


def frozen_nullspace(m, st: NullStructure):
    """Traceable nullspace basis: unit entries on free columns, solved pivots."""
    nf = len(st.free)
    free = np.array(st.free, dtype=int)
    basis = jnp.zeros((st.n, nf), dtype=m.dtype).at[free, np.arange(nf)].set(1.0)
    if not st.pivots:
        return basis
    rows, piv = np.array(st.rows), np.array(st.pivots)
    a = m[rows]
    sol = jnp.linalg.solve(a[:, piv], a[:, free])
    return basis.at[piv].set(-sol)


def _frozen_nullspace_np(m: np.ndarray, st: NullStructure) -> np.ndarray:
    basis = np.zeros((st.n, len(st.free)))
    basis[list(st.free), np.arange(len(st.free))] = 1.0
    if st.pivots:
        a = m[list(st.rows)]
        basis[list(st.pivots)] = -np.linalg.solve(a[:, list(st.pivots)], a[:, list(st.free)])
    return basis


def _polar_basis_fn(system: PresymplecticSystem, records: Sequence[ConstraintRecord], x_ref: np.ndarray,
                    eps_rank: float):
    """Traceable x -> basis of the polar of T P^l inside T P1, and its structure."""
    n = system.layout.total_dim
    prim_fn = stacked_fn(system.primaries)
    all_fn = stacked_fn(records)
    jac_prim = jax.jacrev(prim_fn)
    jac_all = jax.jacrev(all_fn)
    j_ref = stacked_jacobian(records, x_ref)
    st_t = choose_structure(j_ref, eps_rank)
    tangent_ref = _frozen_nullspace_np(j_ref, st_t) if records else np.eye(n)
    pairing_ref = (np.asarray(system.omega.raw(x_ref)) @ tangent_ref).T
    if system.primaries:
        pairing_ref = np.vstack([stacked_jacobian(system.primaries, x_ref), pairing_ref])

    def pairing(x):
        tangent = frozen_nullspace(jac_all(x), st_t) if records else jnp.eye(n)
        rows = (system.omega.raw(x) @ tangent).T
        if system.primaries:
            rows = jnp.vstack([jac_prim(x), rows])
        return rows

    st_k = choose_structure(pairing_ref, eps_rank)
    return (lambda x: frozen_nullspace(pairing(x), st_k)), st_k


def consistency_candidates(system: PresymplecticSystem, p, records: Sequence[ConstraintRecord], level: int,
                           eps_rank: float = EPS_RANK) -> list[ScalarFunction]:
    """Candidates v_k(x) . grad H(x) for the polar basis of T P^level inside T P1.

    ``records`` are all constraints up to ``level``; the pivot pattern of the
    basis is fixed at ``p``.
    """
    x_ref = as_coords(p)
    basis_fn, st = _polar_basis_fn(system, records, x_ref, eps_rank)
    if not st.free:
        return []
    grad_h = jax.grad(system.hamiltonian.trace)
    names, nodes = [], []
    for i in st.free:
        coord, node = system.label(i)
        names.append(f"dH/d{coord}" + (f"@{node}" if node is not None else ""))
        nodes.append(node)
    fam = FunctionFamily(lambda x: basis_fn(x).T @ grad_h(x), names, nodes, label=f"level{level + 1}",
                         joint=True)
    return fam.members()


def is_new_constraint(f: ScalarFunction, existing: Sequence[ConstraintRecord], points: Sequence,
                      eps_con: float = 1e-8, eps_rank: float = EPS_RANK) -> bool:
    """Value-based novelty: f is new iff it is nonzero at some sample point."""
    return any(abs(f.value(p)) > eps_con for p in points)


def gradient_is_dependent(f: ScalarFunction, existing: Sequence[ConstraintRecord], points: Sequence,
                          eps_rank: float = EPS_RANK) -> bool:
    """True when grad f lies in the span of the existing gradients at every sample."""
    for p in points:
        g = f.gradient(p)
        if not np.any(g):
            continue
        if not existing:
            return False
        span = Subspace.span(stacked_jacobian(existing, p).T, len(g), eps_rank)
        if not span.contains(g, eps_rank):
            return False
    return True


# -- classification and gauge directions --------------------------------------

def _final_polar(system: PresymplecticSystem, p, constraints: Sequence[ConstraintRecord], eps_rank: float):
    tc = tangent_space(p, constraints, eps_rank)
    t1 = tangent_space(p, system.primaries, eps_rank)
    return tc, t1, polar(system.omega, p, tc, within=t1, eps_rank=eps_rank)


def _polar_test(f: ScalarFunction, point, polar_space: Subspace, eps_con: float) -> bool:
    g = f.gradient(point)
    if polar_space.dim == 0:
        return True
    return bool(np.max(np.abs(polar_space.basis.T @ g)) <= eps_con * np.linalg.norm(g))


def classify_secondary_intrinsic(f: ScalarFunction, final_set_points: Sequence, system: PresymplecticSystem,
                                 constraints: Sequence[ConstraintRecord], tol: Tolerances = Tolerances()) -> str:
    """first iff the polar of TC (inside T P1) annihilates df at every point."""
    for p in final_set_points:
        _, _, kc = _final_polar(system, p, constraints, tol.eps_rank)
        if not _polar_test(f, p, kc, tol.eps_con):
            return "second"
    return "first"


def lift(record: ConstraintRecord, ambient: AmbientSystem) -> ConstraintRecord:
    """Chart constraint pulled back to the ambient space through ``restrict``."""
    f = record.fn
    fam = FunctionFamily(lambda y: jnp.reshape(f.trace(ambient.restrict(y)), (1,)), [f.name], [f.node])
    return ConstraintRecord(fam.members()[0], record.level, record.class_tag, record.provenance)


def lift_all(records: Sequence[ConstraintRecord], ambient: AmbientSystem) -> list[ConstraintRecord]:
    """Lift many chart constraints, sharing one family per source family."""
    out = []
    for fam, pos, idx in _groups(records):
        index = np.array(idx)
        lifted = FunctionFamily(lambda y, fam=fam, index=index: fam.fn(ambient.restrict(y))[index],
                                [fam.names[i] for i in idx], [fam.nodes[i] for i in idx], label=fam.label)
        for member, k in zip(lifted.members(), pos):
            r = records[k]
            out.append((k, ConstraintRecord(member, r.level, r.class_tag, r.provenance)))
    return [r for _, r in sorted(out, key=lambda t: t[0])]


def classify_primary_ambient(f: ScalarFunction, final_set_points: Sequence, ambient: AmbientSystem,
                             ambient_constraints: Sequence[ConstraintRecord],
                             tol: Tolerances = Tolerances()) -> str:
    """first iff the ambient polar of TC annihilates df at every (ambient) point."""
    for y in final_set_points:
        tc = tangent_space(y, ambient_constraints, tol.eps_rank)
        kc = polar(ambient.omega, y, tc, eps_rank=tol.eps_rank)
        if not _polar_test(f, y, kc, tol.eps_con):
            return "second"
    return "first"


@dataclass(frozen=True)
class GaugeDirections:
    gauge: Subspace
    kinematic: Subspace


def gauge_basis(p, system: PresymplecticSystem, final_constraints: Sequence[ConstraintRecord],
                eps_rank: float = EPS_RANK) -> GaugeDirections:
    """TC intersected with its polar (inside T P1), and the kinematic part ker omega_P1 within TC."""
    tc, t1, kc = _final_polar(system, p, final_constraints, eps_rank)
    gauge = tc.intersect(kc, eps_rank)
    ker1 = t1.intersect(polar(system.omega, p, t1, within=t1, eps_rank=eps_rank), eps_rank)
    return GaugeDirections(gauge, tc.intersect(ker1, eps_rank))


def tangential_residual(system: PresymplecticSystem, p, constraints: Sequence[ConstraintRecord],
                        X=None, eps_rank: float = EPS_RANK) -> tuple[np.ndarray, float]:
    """Best X in TC solving Omega^T X = dH on T P1, and the relative residual.

    When ``X`` is given it is scored instead of the least-squares solution.
    """
    x = as_coords(p)
    tc = tangent_space(x, constraints, eps_rank)
    t1 = tangent_space(x, system.primaries, eps_rank)
    om = system.omega.evaluate(x)
    dh = system.hamiltonian.gradient(x)
    lhs = t1.basis.T @ om.T @ tc.basis
    rhs = t1.basis.T @ dh
    if X is None:
        y = np.linalg.lstsq(lhs, rhs, rcond=eps_rank)[0] if tc.dim else np.zeros(0)
        X = tc.basis @ y
    res = t1.basis.T @ (om.T @ X - dh)
    # relative to |dH|, or to the size of Omega^T X when dH vanishes
    scale = max(np.linalg.norm(dh), np.linalg.norm(om, 2) * np.linalg.norm(X), 1e-300)
    return np.asarray(X), float(np.linalg.norm(res) / scale)


# -- the algorithm ---------------------------------------------------------------

def _project_all(points, constraints, tol: Tolerances):
    kept = []
    for p in points:
        try:
            kept.append(project_to_constraints(p, constraints, tol.projection_tol, tol.max_iter, tol.eps_rank))
        except ProjectionError:
            continue
    return kept


def _common(values: list[int], what: str, warnings: list[str]) -> int:
    if len(set(values)) > 1:
        warnings.append(f"point-dependent structure: {what} differs across seeds {sorted(set(values))}")
    return values[0]


def run_gnh(system: PresymplecticSystem, tolerances: Tolerances = Tolerances(),
            ambient: AmbientSystem | None = None, max_levels: int | None = None) -> GnhReport:
    """Iterate consistency conditions to the final constraint set and classify it."""
    tol = tolerances
    warnings: list[str] = []
    if not system.seed_points:
        raise ValueError("run_gnh needs at least one seed point")
    n = system.layout.total_dim
    max_levels = n + 1 if max_levels is None else max_levels

    records = [ConstraintRecord(r.fn, 1, r.class_tag, r.provenance) for r in system.primaries]
    seeds = _project_all(system.seed_points, records, tol)
    ambient_primaries = list(ambient.primaries) if ambient is not None else []
    if not seeds:
        level = LevelRecord(1, records + ambient_primaries, -1, -1)
        return GnhReport([level], -1, 0, 0, False, {}, ["primary set is empty near the seeds"], records)

    def dims(constraints, what):
        tds, pds = [], []
        for s in seeds:
            tc, _, kc = _final_polar(system, s, constraints, tol.eps_rank)
            tds.append(tc.dim)
            pds.append(kc.dim)
        return _common(tds, f"{what} tangent dim", warnings), _common(pds, f"{what} polar dim", warnings)

    td, pd = dims(records, "level 1")
    levels = [LevelRecord(1, records + ambient_primaries, td, pd)]
    terminated = False
    empty = False
    while True:
        level = levels[-1].level
        candidates = consistency_candidates(system, seeds[0], records, level, tol.eps_rank)
        new = [f for f in candidates if is_new_constraint(f, records, seeds, tol.eps_con, tol.eps_rank)]
        levels[-1].generated = len(new)
        if not new:
            terminated = True
            break
        if level >= max_levels:
            warnings.append(f"stopped after {level} levels without termination")
            break
        added = []
        for k, f in enumerate(candidates):
            if f not in new:
                continue
            added.append(ConstraintRecord(f, level + 1, provenance=f"generated(from_level={level}, direction={k})"))
        seeds = _project_all(seeds, records + added, tol)
        if not seeds:
            levels.append(LevelRecord(level + 1, added, -1, -1))
            records = records + added
            empty = True
            break
        # gradient redundancy is judged on the new level set
        for j, rec in enumerate(added):
            rec.dependent = gradient_is_dependent(rec.fn, records + added[:j], seeds, tol.eps_rank)
        records = records + added
        td, pd = dims(records, f"level {level + 1}")
        levels.append(LevelRecord(level + 1, added, td, pd))

    if empty:
        return GnhReport(levels, -1, 0, 0, False, {}, warnings + ["final constraint set is empty"], records)

    # classification
    classes: dict[str, str] = {}
    for r in records:
        if r.level == 1 and ambient is not None:
            continue
        r.class_tag = classify_secondary_intrinsic(r.fn, seeds, system, records, tol)
        classes[r.name] = r.class_tag
    all_records = list(records)
    if ambient is not None:
        amb_points = [ambient.embed(as_coords(s)) for s in seeds]
        amb_constraints = ambient_primaries + lift_all([r for r in records if r.level > 1], ambient)
        for r in ambient_primaries:
            r.class_tag = classify_primary_ambient(r.fn, amb_points, ambient, amb_constraints, tol)
            r.ambient = True
            classes[r.name] = r.class_tag
        all_records = ambient_primaries + records

    gd, kd = [], []
    for s in seeds:
        g = gauge_basis(s, system, records, tol.eps_rank)
        gd.append(g.gauge.dim)
        kd.append(g.kinematic.dim)
    gauge_dim = _common(gd, "gauge dim", warnings)
    kin_dim = _common(kd, "kinematic dim", warnings)
    return GnhReport(levels, levels[-1].tangent_dim, gauge_dim, kin_dim, terminated, classes, warnings,
                     all_records, seeds)
