"""Invariant suite run by ``gnhlab check``."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .constraints import Tolerances, gauge_basis, run_gnh, stacked_values, tangential_residual
from .core import MalformedFormError, TwoFormField, check_antisymmetric
from .functions import gradient_check
from .integrator import Monitor, analysis, default_monitors, evolve, gauge_kick, rk4_step
from .slicing import SlicingGenerator, random_lapse_shift, reconstruct_metric, split_metric, volume_factor
from .theories import TheorySpec
from .theories.duality import energy_momentum_vs_hamiltonian, tangent_energy_momentum


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}" + (f": {self.detail}" if self.detail else "")


def _result(name: str, value: float, bound: float, fmt: str = ".2e") -> CheckResult:
    ok = bool(np.isfinite(value) and value <= bound)
    return CheckResult(name, ok, f"{value:{fmt}} <= {bound:{fmt}}" if ok else f"{value:{fmt}} > {bound:{fmt}}")


def _random_generator(rng: np.random.Generator, theory: TheorySpec, chi: bool = True) -> SlicingGenerator:
    spatial = theory.generator.zeta.shape[0]
    c = rng.normal(size=theory.nodes) if chi and theory.name in ("maxwell", "chern_simons") else 0.0
    return SlicingGenerator(rng.uniform(0.5, 1.5), rng.normal(size=spatial), c)


# -- global checks ------------------------------------------------------------

def check_metric_split(rng: np.random.Generator, samples: int = 1000) -> list[CheckResult]:
    trip, vol = 0.0, 0.0
    for _ in range(samples):
        ls = random_lapse_shift(rng, 3)
        g = reconstruct_metric(ls)
        back = split_metric(g)
        trip = max(trip, abs(back.N - ls.N), np.max(np.abs(back.M - ls.M)), np.max(np.abs(back.gamma - ls.gamma)))
        vol = max(vol, abs(np.sqrt(-np.linalg.det(g)) - volume_factor(ls)) / volume_factor(ls))
    return [_result("slicing: split/reconstruct round trip", trip, 1e-13),
            _result("slicing: sqrt(-det g) = N sqrt(det gamma)", vol, 1e-12)]


def rk4_state_error_ratio(dt: float = 0.1, T: float = 2.0) -> float:
    """Error ratio of RK4 on the harmonic oscillator when dt halves."""
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    x0 = np.array([1.0, 0.0])
    errs = []
    for h in (dt, dt / 2):
        x = x0
        for _ in range(int(round(T / h))):
            x = rk4_step(lambda y: A @ y, x, h)
        errs.append(np.linalg.norm(x - np.array([np.cos(T), -np.sin(T)])))
    return float(errs[0] / errs[1])


def global_checks(rng: np.random.Generator) -> list[CheckResult]:
    out = check_metric_split(rng)
    r = rk4_state_error_ratio()
    out.append(CheckResult("integrator: RK4 state error order 4", 12.0 <= r <= 20.0, f"ratio {r:.2f}"))
    return out


# -- per-theory checks ----------------------------------------------------------

def check_antisymmetry(theory: TheorySpec, corrupt: bool = False) -> CheckResult:
    omega = theory.system.omega
    if corrupt:
        m = np.array(omega.evaluate(theory.system.seed_points[0]))
        sym = np.ones_like(m) * 1e-3 * max(1.0, np.abs(m).max())
        omega = TwoFormField(matrix_fn=lambda x, m=m + sym: m, dim=m.shape[0])
    try:
        for p in theory.system.seed_points:
            check_antisymmetric(np.asarray(omega.raw(p)))
    except MalformedFormError as err:
        return CheckResult(f"{theory.name}: omega antisymmetric", False, str(err))
    return CheckResult(f"{theory.name}: omega antisymmetric", True)


def check_gradients(theory: TheorySpec, rng: np.random.Generator, points: int = 3, per_family: int = 3,
                    tol: Tolerances = Tolerances()) -> CheckResult:
    fns = [theory.system.hamiltonian]
    for fam in theory.constraint_families():
        members = fam.members()
        fns += [members[i] for i in rng.choice(len(members), size=min(per_family, len(members)), replace=False)]
    worst = 0.0
    for _ in range(points):
        x = theory.sample_state(rng)
        for f in fns:
            worst = max(worst, gradient_check(f, x, tol.fd_step))
    return _result(f"{theory.name}: gradients match finite differences", worst, 1e-6)


def check_linearity(theory: TheorySpec, rng: np.random.Generator) -> CheckResult:
    worst = 0.0
    for _ in range(3):
        x = theory.sample_state(rng)
        z1, z2 = _random_generator(rng, theory), _random_generator(rng, theory)
        a, b = rng.normal(size=2)
        lhs = theory.hamiltonian(x, z1.combine(a, z2, b))
        h1, h2 = theory.hamiltonian(x, z1), theory.hamiltonian(x, z2)
        scale = max(abs(a * h1) + abs(b * h2), 1e-300)
        worst = max(worst, abs(lhs - a * h1 - b * h2) / scale)
    return _result(f"{theory.name}: H linear in the generator", worst, 1e-12)


def check_rhs_is_hamiltonian(theory: TheorySpec, rng: np.random.Generator, tol: Tolerances) -> list[CheckResult]:
    cons = analysis(theory, tol).chart_constraints()
    worst_res, worst_gauge = 0.0, 0.0
    for _ in range(2):
        x = theory.sample_on_shell(rng)
        rhs = theory.rhs(x)
        _, res = tangential_residual(theory.system, x, cons, X=rhs, eps_rank=tol.eps_rank)
        X, _ = tangential_residual(theory.system, x, cons, eps_rank=tol.eps_rank)
        g = gauge_basis(x, theory.system, cons, tol.eps_rank).gauge
        worst_res = max(worst_res, res)
        worst_gauge = max(worst_gauge, g.distance(rhs - X) / max(np.linalg.norm(rhs), 1.0))
    return [_result(f"{theory.name}: RHS solves Hamilton's equation on the final set", worst_res, 1e-8),
            _result(f"{theory.name}: RHS minus tangential solution is gauge", worst_gauge, 1e-8)]


def check_soundness(theory: TheorySpec, tol: Tolerances) -> CheckResult:
    rep = analysis(theory, tol)
    worst = max(tangential_residual(theory.system, s, rep.chart_constraints(), eps_rank=tol.eps_rank)[1]
                for s in rep.final_points)
    return _result(f"{theory.name}: tangential solution exists at every seed", worst, tol.eps_con)


def check_chain(theory: TheorySpec, tol: Tolerances) -> CheckResult:
    rep = analysis(theory, tol)
    dims = [lvl.tangent_dim for lvl in rep.levels]
    ok = rep.terminated and all(a >= b for a, b in zip(dims, dims[1:])) and not rep.warnings
    return CheckResult(f"{theory.name}: constraint chain terminates monotonically", ok,
                       f"tangent dims {dims}, warnings {rep.warnings}")


def check_duality(theory: TheorySpec, rng: np.random.Generator) -> list[CheckResult]:
    out = []
    if theory.name in ("maxwell", "string"):
        worst = 0.0
        for _ in range(3):
            x = theory.sample_state(rng)
            worst = max(worst, abs(energy_momentum_vs_hamiltonian(theory, x, _random_generator(rng, theory)))
                        / theory.scale(x))
        out.append(_result(f"{theory.name}: energy-momentum pairs to -H", worst, 1e-12))
    if theory.name == "chern_simons":
        w0, w1 = 0.0, 0.0
        for _ in range(3):
            x, y = theory.sample_state(rng), theory.sample_on_shell(rng)
            w0 = max(w0, abs(energy_momentum_vs_hamiltonian(theory, x, _random_generator(rng, theory, chi=False)))
                     / theory.scale(x))
            w1 = max(w1, abs(energy_momentum_vs_hamiltonian(theory, y, _random_generator(rng, theory)))
                     / theory.scale(y))
        out.append(_result("chern_simons: energy-momentum pairs to -H (chi = 0)", w0, 1e-12))
        out.append(_result("chern_simons: energy-momentum pairs to -H on the flat set", w1, 1e-12))
    if theory.name == "maxwell":
        worst = 0.0
        for _ in range(3):
            x = theory.sample_state(rng)
            zg = SlicingGenerator(0.0, rng.normal(size=3), rng.normal(size=theory.nodes))
            e, j = tangent_energy_momentum(theory, x, zg)
            worst = max(worst, abs(e - j) / theory.scale(x))
        out.append(_result("maxwell: tangent energy-momentum equals the momentum map", worst, 1e-12))
    return out


def check_on_shell_hamiltonian(theory: TheorySpec, rng: np.random.Generator) -> CheckResult:
    x = theory.sample_on_shell(rng)
    h = abs(theory.hamiltonian(x)) / theory.scale(x)
    if theory.name == "maxwell":
        return CheckResult("maxwell: H is nonzero on shell", h > 1e-6, f"|H|/scale = {h:.3e}")
    return _result(f"{theory.name}: H vanishes on the final set", h, 1e-10)


def check_totally_gauge(theory: TheorySpec, rng: np.random.Generator, tol: Tolerances) -> CheckResult:
    cons = analysis(theory, tol).chart_constraints()
    worst = 0.0
    for _ in range(2):
        x = theory.sample_on_shell(rng)
        rhs = theory.rhs(x)
        g = gauge_basis(x, theory.system, cons, tol.eps_rank).gauge
        worst = max(worst, g.distance(rhs) / max(np.linalg.norm(rhs), 1e-300))
    return _result(f"{theory.name}: evolution is totally gauge", worst, 1e-8)


def check_exact_conservation(theory: TheorySpec, rng: np.random.Generator, steps: int = 200) -> CheckResult:
    x = theory.sample_on_shell(rng)
    # roundoff scales with the largest state reached, which can grow linearly
    s = evolve(theory, x, 0.01, steps, default_monitors(theory) + [Monitor("size", lambda y: np.max(np.abs(y)))])
    scale = max(1.0, float(np.max(s.column("size"))))
    if theory.name == "maxwell":
        drift = float(np.max(s.column("gauss_max"))) / scale
    else:
        cols = ["F12_max"] + [k for k in s.columns if k.startswith("W")]
        drift = max(float(np.max(np.abs(s.column(k) - s.column(k)[0]))) for k in cols) / scale
    return _result(f"{theory.name}: exactly conserved quantities drift at roundoff", drift, 1e-12)


def check_gauge_kick(theory: TheorySpec, rng: np.random.Generator, tol: Tolerances) -> CheckResult:
    cons = analysis(theory, tol).chart_constraints()
    x = theory.sample_on_shell(rng)
    dim = gauge_basis(x, theory.system, cons, tol.eps_rank).gauge.dim
    y = gauge_kick(theory, x, rng.normal(size=dim), cons, tol)
    a, b = theory.invariants(x), theory.invariants(y)
    diff = float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(a))))
    return _result(f"{theory.name}: gauge kicks leave physical observables unchanged", diff, 1e-10)


def check_zeta_independence(tol: Tolerances, rng_seed: int = 0) -> CheckResult:
    from .theories import maxwell
    th1 = maxwell.build(generator=SlicingGenerator(1.0, np.zeros(3)), rng_seed=rng_seed)
    th2 = maxwell.build(generator=SlicingGenerator(0.6, np.array([0.3, -0.2, 0.5]), 0.4), rng_seed=rng_seed + 1)
    r1, r2 = run_gnh(th1.system, tol), run_gnh(th2.system, tol)
    worst = 0.0
    for ra, rb in ((r1, r2), (r2, r1)):
        worst = max(worst, max(float(np.max(np.abs(stacked_values(ra.chart_constraints(), p))))
                               for p in rb.final_points))
    return _result("maxwell: constraint set independent of the slicing generator", worst, tol.eps_con)


def theory_checks(theory: TheorySpec, rng: np.random.Generator, tol: Tolerances = Tolerances(),
                  corrupt_omega: bool = False) -> list[CheckResult]:
    out = [check_antisymmetry(theory, corrupt_omega)]
    if not out[0].passed:
        return out
    out += [check_gradients(theory, rng, tol=tol), check_linearity(theory, rng), check_chain(theory, tol),
            check_soundness(theory, tol)]
    out += check_rhs_is_hamiltonian(theory, rng, tol)
    out += check_duality(theory, rng)
    if theory.name != "particle":
        out.append(check_on_shell_hamiltonian(theory, rng))
    if theory.name in ("chern_simons", "string"):
        out.append(check_totally_gauge(theory, rng, tol))
    if theory.name in ("maxwell", "chern_simons"):
        out.append(check_exact_conservation(theory, rng))
    out.append(check_gauge_kick(theory, rng, tol))
    if theory.name == "maxwell":
        out.append(check_zeta_independence(tol))
    return out


def run_suite(theories: list[TheorySpec], rng_seed: int = 0, tol: Tolerances = Tolerances(),
              corrupt_omega: bool = False, report: Callable[[CheckResult], None] | None = None) -> list[CheckResult]:
    rng = np.random.default_rng(rng_seed)
    results = []
    for r in global_checks(rng):
        results.append(r)
        if report:
            report(r)
    for th in theories:
        for r in theory_checks(th, rng, tol, corrupt_omega):
            results.append(r)
            if report:
                report(r)
    return results
