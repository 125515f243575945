import numpy as np
import pytest
from scipy.linalg import expm

from gnhlab.checks import rk4_state_error_ratio
from gnhlab.constraints import gauge_basis
from gnhlab.core import StateVector
from gnhlab.integrator import BlowUpError, Monitor, TimeSeries, evolve, final_constraints, gauge_kick, rk4_step
from gnhlab.theories import maxwell, particle

from helpers import default_theory


def test_zero_rhs_leaves_state_unchanged(rng):
    x = rng.normal(size=5)
    assert np.array_equal(rk4_step(lambda y: np.zeros_like(y), x, 0.3), x)


def test_linear_step_matches_exponential(rng):
    A = rng.normal(size=(4, 4))
    x = rng.normal(size=4)
    errs = []
    for dt in (0.02, 0.01):
        errs.append(np.linalg.norm(rk4_step(lambda y: A @ y, x, dt) - expm(dt * A) @ x))
    # local error is O(dt^5)
    assert 25.0 <= errs[0] / errs[1] <= 40.0


def test_oscillator_state_error_is_fourth_order():
    assert 15.0 <= rk4_state_error_ratio() <= 17.0


def test_oscillator_energy_drift_is_fifth_order():
    # RK4 keeps a conserved quadratic form up to O(dt^6) per step
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    drifts = []
    for dt in (0.2, 0.1):
        x = np.array([1.0, 0.0])
        for _ in range(int(round(4.0 / dt))):
            x = rk4_step(lambda y: A @ y, x, dt)
        drifts.append(abs(x @ x - 1.0))
    assert 30.0 <= drifts[0] / drifts[1] <= 34.0


def test_state_vector_round_trip(rng):
    th = default_theory("particle")
    p = th.state(th.sample_on_shell(rng))
    q = rk4_step(th.rhs_callable(), p, 0.1)
    assert isinstance(q, StateVector) and q.layout == p.layout


def test_blow_up_keeps_recorded_rows():
    th = default_theory("particle")
    with pytest.raises(BlowUpError) as info, np.errstate(over="ignore"):
        evolve(th, np.ones(8), 0.1, 5, rhs=lambda y: y * 1e200)
    assert info.value.series is not None and len(info.value.series) >= 1


def test_zero_steps_give_one_row(rng):
    th = default_theory("particle")
    s = evolve(th, th.sample_on_shell(rng), 0.1, 0)
    assert len(s) == 1 and s.column("step")[0] == 0


def test_invalid_arguments(rng):
    th = default_theory("particle")
    x = th.sample_on_shell(rng)
    with pytest.raises(ValueError):
        evolve(th, x, 0.1, -1)
    with pytest.raises(ValueError):
        evolve(th, x, 0.1, 3, project_every=0)
    with pytest.raises(ValueError):
        Monitor("m", lambda y: 0.0, cadence=0)


def test_monitor_cadence_holds_last_value(rng):
    th = default_theory("particle")
    calls = []
    mon = Monitor("count", lambda y: calls.append(1) or len(calls), cadence=3)
    s = evolve(th, th.sample_on_shell(rng), 0.1, 7, [mon])
    assert list(s.column("count")) == [1, 1, 1, 2, 2, 2, 3, 3]


def test_csv_is_repr_exact():
    s = TimeSeries(0.1)
    s.append({"step": 0, "lambda": 0.0, "H": 0.1 + 0.2})
    s.append({"step": 1, "lambda": 0.1, "H": 1e-17})
    text = s.to_csv()
    assert text.splitlines() == ["step,lambda,H", "0,0.0,0.30000000000000004", "1,0.1,1e-17"]
    with pytest.raises(ValueError):
        s.append({"step": 2})


def test_maxwell_uniform_static_data_keeps_monitors_constant():
    th = maxwell.build()
    A = np.tile([0.0, 0.3, -0.7, 1.1], (th.nodes, 1))
    E = np.tile([0.5, 0.2, -0.4], (th.nodes, 1))
    s = evolve(th, th.layout.assemble(A=A, E=E), 0.05, 20)
    for name in s.columns:
        if name not in ("step", "lambda"):
            col = s.column(name)
            assert np.allclose(col, col[0], rtol=1e-13, atol=1e-13), name


def test_particle_follows_a_straight_line(rng):
    th = particle.build(m=1.0)
    x0 = th.sample_on_shell(rng)
    s = evolve(th, x0, 1e-3, 1000, [])
    velocity = np.diag([-1.0, 1.0, 1.0, 1.0]) @ x0[4:]  # g^-1 pi / m
    line = x0[:4] + 1000 * 1e-3 * velocity
    assert np.max(np.abs(s.final_state[:4] - line)) <= 1e-9


def test_chern_simons_flat_data_stays_flat(rng):
    th = default_theory("chern_simons")
    s = evolve(th, th.sample_on_shell(rng), 0.01, 300)
    assert np.max(s.column("F12_max")) <= 1e-12


def test_projection_during_evolution(rng):
    th = default_theory("chern_simons")
    x = th.sample_on_shell(rng)
    s = evolve(th, x, 0.05, 10, project_every=2)
    assert np.max(s.column("F12_max")) <= 1e-11


def test_string_hamiltonian_stays_zero_on_shell(rng):
    th = default_theory("string")
    s = evolve(th, th.sample_on_shell(rng), 0.05, 100)
    assert np.max(np.abs(s.column("H"))) <= 1e-10


# -- gauge kicks ----------------------------------------------------------------------

def test_zero_kick_is_identity(rng):
    th = default_theory("chern_simons")
    x = th.sample_on_shell(rng)
    cons = final_constraints(th)
    y = gauge_kick(th, x, np.zeros(gauge_basis(x, th.system, cons).gauge.dim), cons)
    assert np.allclose(y, x, atol=1e-12)


def test_kick_needs_matching_coefficients(rng):
    th = default_theory("chern_simons")
    with pytest.raises(ValueError):
        gauge_kick(th, th.sample_on_shell(rng), np.zeros(3))


def test_maxwell_kick_preserves_fields(rng):
    th = default_theory("maxwell")
    x = th.sample_on_shell(rng)
    cons = final_constraints(th)
    dim = gauge_basis(x, th.system, cons).gauge.dim
    y = gauge_kick(th, x, rng.normal(size=dim), cons)
    assert np.max(np.abs(y - x)) > 0.1
    assert np.allclose(th.invariants(y), th.invariants(x), rtol=0, atol=1e-12)


def test_particle_kick_moves_along_the_worldline(rng):
    th = particle.build()
    x = th.sample_on_shell(rng)
    y = gauge_kick(th, x, [0.7])
    u = np.diag([-1.0, 1.0, 1.0, 1.0]) @ x[4:]
    dq = y[:4] - x[:4]
    off_line = dq - (dq @ u) / (u @ u) * u
    assert np.linalg.norm(dq) > 0.1
    assert np.linalg.norm(off_line) <= 1e-10
    assert np.allclose(y[4:], x[4:], atol=1e-12)
