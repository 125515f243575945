"""Fixed-step RK4 evolution with constraint and observable monitoring."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .constraints import ConstraintRecord, GnhReport, Tolerances, gauge_basis, project_to_constraints, run_gnh
from .core import StateVector, as_coords
from .slicing import SlicingGenerator
from .theories.base import TheorySpec


class BlowUpError(RuntimeError):
    """The state became non-finite; ``series`` holds the rows recorded so far."""

    def __init__(self, step: int, series: "TimeSeries | None" = None):
        super().__init__(f"non-finite state at step {step}")
        self.step = step
        self.series = series


@dataclass
class Monitor:
    name: str
    evaluator: Callable[[np.ndarray], float]
    cadence: int = 1

    def __post_init__(self):
        if self.cadence < 1:
            raise ValueError("cadence must be at least 1")


@dataclass
class TimeSeries:
    dt: float
    steps: int = 0
    columns: dict[str, list[float]] = field(default_factory=dict)
    final_state: np.ndarray | None = None

    def append(self, row: dict[str, float]) -> None:
        if not self.columns:
            self.columns = {k: [] for k in row}
        if list(row) != list(self.columns):
            raise ValueError("row keys do not match the existing columns")
        for k, v in row.items():
            self.columns[k].append(float(v))

    def __len__(self) -> int:
        return len(self.columns.get("step", []))

    def column(self, name: str) -> np.ndarray:
        return np.asarray(self.columns[name])

    def to_csv(self, target=None) -> str:
        """CSV text (repr-exact floats); also written to ``target`` if given."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        names = list(self.columns)
        writer.writerow(names)
        for i in range(len(self)):
            row = []
            for k in names:
                v = self.columns[k][i]
                row.append(str(int(v)) if k == "step" else repr(v))
            writer.writerow(row)
        text = buf.getvalue()
        if target is not None:
            with open(target, "w", newline="") as fh:
                fh.write(text)
        return text


def rk4_step(rhs: Callable[[np.ndarray], np.ndarray], p, dt: float, step: int = 0):
    """One classical Runge-Kutta step; returns the same type as ``p``."""
    x = as_coords(p)
    k1 = rhs(x)
    k2 = rhs(x + 0.5 * dt * k1)
    k3 = rhs(x + 0.5 * dt * k2)
    k4 = rhs(x + dt * k3)
    y = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(y)):
        raise BlowUpError(step)
    return StateVector(y, p.layout) if isinstance(p, StateVector) else y


def final_constraints(theory: TheorySpec, tol: Tolerances = Tolerances()) -> list[ConstraintRecord]:
    """Chart constraints of the final set, from a cached constraint-algorithm run."""
    return analysis(theory, tol).chart_constraints()


def analysis(theory: TheorySpec, tol: Tolerances = Tolerances()) -> GnhReport:
    cache = theory.__dict__.setdefault("_reports", {})
    if tol not in cache:
        cache[tol] = run_gnh(theory.system, tol, ambient=theory.ambient)
    return cache[tol]


def default_monitors(theory: TheorySpec) -> list[Monitor]:
    mons = [Monitor("H", lambda x: theory.hamiltonian(x))]
    for fam in theory.constraint_families():
        mons.append(Monitor(f"{fam.label}_max", lambda x, fam=fam: float(np.max(np.abs(fam.values(x))))))
    for name, fn in theory.observables.items():
        if name != "H":
            mons.append(Monitor(name, fn))
    return mons


def evolve(theory: TheorySpec, p0, dt: float, steps: int, monitors: Sequence[Monitor] | None = None,
           project_every: int | None = None, generator: SlicingGenerator | None = None,
           constraints: Sequence[ConstraintRecord] | None = None, tol: Tolerances = Tolerances(),
           rhs: Callable[[np.ndarray], np.ndarray] | None = None) -> TimeSeries:
    """Integrate the theory's evolution equations from ``p0``.

    Row 0 is the initial state.  With ``project_every`` the state is pulled
    back to the final constraint set after every that many steps.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if project_every is not None and project_every < 1:
        raise ValueError("project_every must be positive")
    monitors = list(default_monitors(theory) if monitors is None else monitors)
    rhs = rhs or theory.rhs_callable(generator)
    if project_every and constraints is None:
        constraints = final_constraints(theory, tol)
    series = TimeSeries(dt)
    last: dict[str, float] = {}

    def record(step: int, x: np.ndarray) -> None:
        row = {"step": step, "lambda": step * dt}
        for m in monitors:
            if step % m.cadence == 0 or m.name not in last:
                last[m.name] = float(m.evaluator(x))
            row[m.name] = last[m.name]
        series.append(row)

    x = np.array(as_coords(p0), dtype=float)
    record(0, x)
    for step in range(1, steps + 1):
        try:
            x = rk4_step(rhs, x, dt, step)
        except BlowUpError as err:
            series.final_state = x
            raise BlowUpError(err.step, series) from None
        if project_every and step % project_every == 0:
            x = project_to_constraints(x, constraints, tol.projection_tol, tol.max_iter, tol.eps_rank)
        series.steps = step
        record(step, x)
    series.final_state = x
    return series


def gauge_kick(theory: TheorySpec, p, coefficients, constraints: Sequence[ConstraintRecord] | None = None,
               tol: Tolerances = Tolerances()):
    """Move along the gauge directions at p, then return to the final set."""
    x = as_coords(p)
    constraints = final_constraints(theory, tol) if constraints is None else constraints
    basis = gauge_basis(x, theory.system, constraints, tol.eps_rank).gauge.basis
    c = np.asarray(coefficients, dtype=float).reshape(-1)
    if c.shape[0] != basis.shape[1]:
        raise ValueError(f"expected {basis.shape[1]} coefficients, got {c.shape[0]}")
    y = project_to_constraints(x + basis @ c, constraints, tol.projection_tol, tol.max_iter, tol.eps_rank)
    return StateVector(y, p.layout) if isinstance(p, StateVector) else y
