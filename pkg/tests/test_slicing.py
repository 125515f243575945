import numpy as np
import pytest

from gnhlab.slicing import (LapseShift, SignatureError, SlicingGenerator, contravariant_metric, effective_generator,
                            random_lapse_shift, reconstruct_metric, split_metric, volume_factor)

SHIFTED = LapseShift(2.0, np.array([0.3, 0.0, 0.0]), np.eye(3))


def test_minkowski_splits_trivially():
    ls = split_metric(np.diag([-1.0, 1.0, 1.0, 1.0]))
    assert ls.N == 1.0
    assert np.array_equal(ls.M, np.zeros(3))
    assert np.array_equal(ls.gamma, np.eye(3))


def test_reconstruct_with_shift():
    g = reconstruct_metric(SHIFTED)
    assert g[0, 0] == pytest.approx(0.09 - 4.0)
    assert np.allclose(g[0, 1:], [0.3, 0.0, 0.0])
    assert np.allclose(g[1:, 1:], np.eye(3))


def test_round_trip(rng):
    for _ in range(200):
        ls = random_lapse_shift(rng)
        back = split_metric(reconstruct_metric(ls))
        assert abs(back.N - ls.N) <= 1e-13
        assert np.max(np.abs(back.M - ls.M)) <= 1e-13
        assert np.max(np.abs(back.gamma - ls.gamma)) <= 1e-13


def test_split_stacked_metrics(rng):
    stack = [random_lapse_shift(rng) for _ in range(5)]
    g = np.stack([reconstruct_metric(ls) for ls in stack])
    back = split_metric(g)
    assert np.allclose(back.N, [ls.N for ls in stack], rtol=0, atol=1e-13)


def test_inverse_metric_examples():
    assert np.allclose(contravariant_metric(LapseShift.minkowski()), np.diag([-1.0, 1.0, 1.0, 1.0]))
    ginv = contravariant_metric(SHIFTED)
    assert ginv[0, 0] == pytest.approx(-0.25)
    assert ginv[0, 1] == pytest.approx(0.075)


def test_inverse_metric_is_inverse(rng):
    for _ in range(100):
        ls = random_lapse_shift(rng)
        assert np.max(np.abs(reconstruct_metric(ls) @ contravariant_metric(ls) - np.eye(4))) <= 1e-12


def test_volume_factor_examples(rng):
    assert volume_factor(LapseShift.minkowski()) == 1.0
    assert volume_factor(LapseShift(2.0, np.zeros(3), np.diag([4.0, 1.0, 1.0]))) == pytest.approx(4.0)
    for _ in range(100):
        ls = random_lapse_shift(rng)
        oracle = np.sqrt(-np.linalg.det(reconstruct_metric(ls)))
        assert abs(volume_factor(ls) - oracle) <= 1e-12 * oracle


@pytest.mark.parametrize("g", [
    np.diag([1.0, 1.0, 1.0, 1.0]),  # Euclidean: no timelike normal
    np.diag([-1.0, -1.0, 1.0, 1.0]),  # spatial block indefinite
    np.array([[1.5, 1.0], [1.0, 1.0]]),  # M_k M^k - g_00 = -0.5
])
def test_rejects_non_lorentzian_slices(g):
    with pytest.raises(SignatureError):
        split_metric(g)


def test_lapse_shift_validation():
    with pytest.raises(SignatureError):
        LapseShift(0.0, np.zeros(3), np.eye(3))
    with pytest.raises(SignatureError):
        LapseShift(1.0, np.zeros(2), np.diag([1.0, -1.0]))
    with pytest.raises(ValueError):
        LapseShift(1.0, np.zeros(2), np.eye(3))


def test_effective_generator_examples():
    eff = effective_generator(SlicingGenerator(1.0, [0.0, 0.0, 0.0]), LapseShift.minkowski())
    assert eff.perp == 1.0 and np.array_equal(eff.parallel, np.zeros(3))
    eff = effective_generator(SlicingGenerator(2.0, [1.0, 0.0, 0.0]), LapseShift(0.5, np.array([0.0, 1.0, 0.0]),
                                                                                   np.eye(3)))
    assert eff.perp == pytest.approx(1.0)
    assert np.allclose(eff.parallel, [1.0, 2.0, 0.0])
    tangent = SlicingGenerator(0.0, [0.2, -1.0, 3.0])
    eff = effective_generator(tangent, SHIFTED)
    assert eff.perp == 0.0 and np.array_equal(eff.parallel, tangent.zeta)


def test_generator_combination():
    a = SlicingGenerator(1.0, [1.0, 2.0], [1.0, 0.0])
    b = SlicingGenerator(0.5, [0.0, 1.0], [0.0, 2.0])
    c = a.combine(2.0, b, -1.0)
    assert c.zeta0 == 1.5
    assert np.array_equal(c.zeta, [2.0, 3.0])
    assert np.array_equal(c.chi, [2.0, -2.0])
    assert not SlicingGenerator(0.0, [1.0]).transverse
