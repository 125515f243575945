import numpy as np
import pytest

from gnhlab.grid import Grid
from gnhlab.slicing import LapseShift, SignatureError, SlicingGenerator
from gnhlab.theories import TargetMetric, chern_simons, maxwell, particle, string
from gnhlab.theories.duality import energy_momentum_vs_hamiltonian

from helpers import default_theory


def random_generator(rng, theory):
    spatial = theory.generator.zeta.shape[0]
    return SlicingGenerator(rng.uniform(0.5, 1.5), rng.normal(size=spatial), rng.normal(size=theory.nodes))


# -- particle -------------------------------------------------------------------

def test_particle_geodesic_velocity_on_shell(rng):
    th = particle.build(m=1.0)
    x = th.sample_on_shell(rng)
    pi = x[4:]
    v = th.rhs(x)
    assert np.allclose(v[:4], np.diag([-1.0, 1.0, 1.0, 1.0]) @ pi / 1.0)
    assert np.array_equal(v[4:], np.zeros(4))


def test_particle_hamiltonian_and_mass_shell():
    th = particle.build(generator=SlicingGenerator(1.0, np.zeros(3)))
    x = np.concatenate([np.zeros(4), [-1.0, 0.0, 0.0, 0.0]])
    assert th.hamiltonian(x) == pytest.approx(1.0)
    assert th.mass_shell.values(x)[0] == pytest.approx(0.0)


def test_particle_rejects_bad_inputs():
    with pytest.raises(ValueError):
        particle.build(m=0.0)
    with pytest.raises(ValueError):
        particle.build(target=TargetMetric.euclidean(4))


# -- Maxwell --------------------------------------------------------------------

def test_maxwell_uniform_fields():
    th = maxwell.build(grid=Grid(3, 3))
    A = np.tile([0.0, 0.3, -0.7, 1.1], (th.nodes, 1))
    E = np.tile([0.5, 0.2, -0.4], (th.nodes, 1))
    dx = th.rhs(th.layout.assemble(A=A, E=E))
    assert np.allclose(th.layout.view(dx, "A")[:, 1:], E)
    assert np.allclose(th.layout.view(dx, "A")[:, 0], 0.0)
    assert np.allclose(th.layout.view(dx, "E"), 0.0)


def test_maxwell_zero_fields_have_zero_energy():
    th = default_theory("maxwell")
    assert th.hamiltonian(np.zeros(th.layout.total_dim)) == 0.0


def test_maxwell_plane_wave_dispersion():
    grid = Grid(3, 5, spacing=0.4)
    th = maxwell.build(grid=grid)
    a = 0.8
    k = 2 * np.pi / grid.length
    x2 = grid.coordinates()[:, 1]
    A = np.zeros((grid.nodes, 4))
    A[:, 1] = a * np.sin(k * x2)
    dE = th.layout.view(th.rhs(th.layout.assemble(A=A, E=np.zeros((grid.nodes, 3)))), "E")
    expected = -a * (np.sin(k * grid.spacing) / grid.spacing) ** 2 * np.sin(k * x2)
    assert np.allclose(dE[:, 0], expected, atol=1e-13)
    assert np.allclose(dE[:, 1:], 0.0, atol=1e-13)


def test_maxwell_rhs_preserves_gauss_everywhere(rng):
    th = default_theory("maxwell")
    gauss = th.oracle_secondaries[0]
    for _ in range(3):
        x = th.sample_state(rng)
        dE = th.layout.view(th.rhs(x, random_generator(rng, th)), "E")
        assert np.max(np.abs(th.grid.divergence(dE))) <= 1e-12 * max(1.0, np.max(np.abs(x)))
    assert np.max(np.abs(gauss.values(th.sample_on_shell(rng)))) <= 1e-13


def test_maxwell_curved_slicing_duality(rng):
    ls = LapseShift(1.3, np.array([0.2, -0.1, 0.3]), np.array([[1.2, 0.1, 0.0], [0.1, 0.9, 0.2], [0.0, 0.2, 1.1]]))
    th = maxwell.build(lapse_shift=ls)
    for _ in range(3):
        x = th.sample_state(rng)
        assert abs(energy_momentum_vs_hamiltonian(th, x, random_generator(rng, th))) <= 1e-12 * th.scale(x)


def test_maxwell_momentum_map_examples(rng):
    th = default_theory("maxwell")
    chi = rng.normal(size=th.nodes)
    zg = SlicingGenerator(0.0, np.zeros(3), chi)
    x = th.sample_state(rng)
    E = th.layout.view(x, "E")
    oracle = th.grid.cell_volume * np.sum(E * th.grid.gradient(chi))
    assert th.momentum_map(x, zg) == pytest.approx(oracle, rel=1e-12)
    assert abs(th.momentum_map(th.sample_on_shell(rng), zg)) <= 1e-12
    assert th.momentum_map(np.zeros(th.layout.total_dim), zg) == 0.0
    with pytest.raises(ValueError):
        th.momentum_map(x, SlicingGenerator(1.0, np.zeros(3), chi))


# -- Chern-Simons ---------------------------------------------------------------

def test_chern_simons_constant_connection():
    th = default_theory("chern_simons")
    x = th.layout.assemble(A=np.tile([0.4, -1.0, 2.0], (th.nodes, 1)))
    assert np.allclose(th.oracle_secondaries[0].values(x), 0.0)
    assert np.allclose(th.rhs(x), 0.0)
    assert th.hamiltonian(x) == pytest.approx(0.0, abs=1e-14)


def test_chern_simons_pure_gauge_is_flat(rng):
    th = chern_simons.build(grid=Grid(2, 5))
    phi = rng.normal(size=th.nodes)
    A = np.column_stack([rng.normal(size=th.nodes), th.grid.gradient(phi)])
    x = th.layout.assemble(A=A)
    assert np.max(np.abs(th.oracle_secondaries[0].values(x))) <= 1e-14
    assert abs(th.hamiltonian(x, random_generator(rng, th))) <= 1e-12


def test_chern_simons_chi_defect_is_the_flatness_term(rng):
    th = default_theory("chern_simons")
    flat = th.oracle_secondaries[0]
    for _ in range(3):
        x = th.sample_state(rng)
        zg = random_generator(rng, th)
        defect = energy_momentum_vs_hamiltonian(th, x, zg)
        term = th.grid.cell_volume * np.sum(np.asarray(zg.chi) * flat.values(x))
        assert abs(abs(defect) - abs(term)) <= 1e-12 * th.scale(x)
        assert abs(term) > 1e-6


# -- string ---------------------------------------------------------------------

def test_string_trivial_data():
    th = default_theory("string")
    x = th.sample_state(np.random.default_rng(0))
    phi = th.layout.view(x, "phi").copy()
    phi[:] = [1.0, -2.0]
    y = th.layout.assemble(phi=phi, pi=np.zeros_like(phi), h=th.layout.view(x, "h"))
    for fam in th.oracle_secondaries:
        assert np.allclose(fam.values(y), 0.0)
    assert th.hamiltonian(y) == 0.0
    assert np.allclose(th.rhs(y), 0.0)


def test_string_null_mover_satisfies_constraints(rng):
    th = default_theory("string")
    grid, g = th.grid, th.target.g
    n = np.array([1.0, 1.0])  # null for diag(-1, 1)
    f, c = rng.normal(size=(2, grid.nodes))
    phi = f[:, None] * n
    pi = c[:, None] * (g @ n)
    x = th.layout.assemble(phi=phi, pi=pi, h=th.layout.view(th.sample_state(rng), "h"))
    for fam in th.oracle_secondaries:
        assert np.max(np.abs(fam.values(x))) <= 1e-12
    assert np.max(np.abs(pi)) > 0 and np.max(np.abs(grid.diff(phi, 0))) > 0


def test_string_hamiltonian_doubles_with_the_generator(rng):
    th = default_theory("string")
    x = th.sample_state(rng)
    zg = SlicingGenerator(0.7, [0.4])
    assert th.hamiltonian(x, zg.scaled(2.0)) == 2.0 * th.hamiltonian(x, zg)


def test_string_rejects_euclidean_worldsheet():
    with pytest.raises(SignatureError):
        string.build(h=[1.0, 0.0, 1.0])


@pytest.mark.parametrize("name", ["maxwell", "chern_simons", "string", "particle"])
def test_energy_momentum_needs_transverse_generator(name, rng):
    th = default_theory(name)
    zg = SlicingGenerator(0.0, np.zeros(th.generator.zeta.shape[0]))
    with pytest.raises(ValueError):
        energy_momentum_vs_hamiltonian(th, th.sample_state(rng), zg)
