import numpy as np
import pytest

from gnhlab.core import (BlockLayout, Infeasible, MalformedFormError, StateVector, Subspace, TwoFormField,
                         canonical_form, classify_subspace, hamiltonian_vector_field, kernel, polar,
                         restricted_kernel, solve_hamilton)

# coordinates (q1, q2, p1, p2)
SYMPLECTIC_R4 = TwoFormField(canonical_form([(0, 2), (1, 3)], 4))
ORIGIN = np.zeros(4)


def span(*rows, n=4):
    return Subspace.span(np.array(rows, dtype=float).T, n)


def e(i, n=4):
    v = np.zeros(n)
    v[i] = 1.0
    return v


# -- layout and state ------------------------------------------------------------

def test_layout_index_round_trip():
    layout = BlockLayout([("A", 4, 3), ("E", 4, 2)])
    assert layout.total_dim == 20
    for i in range(layout.total_dim):
        assert layout.index(*layout.locate(i)) == i
    x = np.arange(20.0)
    assert layout.view(x, "E").shape == (4, 2)
    assert np.array_equal(layout.assemble(A=layout.view(x, "A"), E=layout.view(x, "E")), x)


def test_state_vector_checks_length():
    layout = BlockLayout([("q", 1, 2)])
    with pytest.raises(ValueError):
        StateVector(np.zeros(3), layout)


# -- two-forms ------------------------------------------------------------------

def test_symmetric_part_is_rejected():
    m = canonical_form([(0, 1)], 2) + 1e-3
    with pytest.raises(MalformedFormError):
        TwoFormField(m).evaluate(np.zeros(2))


def test_kernel_of_block_degenerate_form():
    omega = TwoFormField([[0, 1, 0], [-1, 0, 0], [0, 0, 0]])
    assert kernel(omega, np.zeros(3)).equals(span(e(2, 3), n=3))


def test_kernel_of_symplectic_form_is_zero():
    assert kernel(SYMPLECTIC_R4, ORIGIN).dim == 0


# -- polars -----------------------------------------------------------------------

def test_polar_of_a_coordinate_line():
    assert polar(SYMPLECTIC_R4, ORIGIN, span(e(0))).equals(span(e(0), e(1), e(3)))


def test_polar_of_full_space_is_zero():
    assert polar(SYMPLECTIC_R4, ORIGIN, Subspace.full(4)).dim == 0


def test_polar_of_zero_is_within():
    within = span(e(0), e(2))
    assert polar(SYMPLECTIC_R4, ORIGIN, Subspace.zero(4), within=within).equals(within)


def test_double_polar_is_identity(rng):
    for _ in range(20):
        B = rng.normal(size=(6, 6))
        omega = TwoFormField(B.T @ canonical_form([(0, 3), (1, 4), (2, 5)], 6) @ B)
        W = Subspace.span(rng.normal(size=(6, rng.integers(0, 7))), 6)
        W2 = polar(omega, np.zeros(6), polar(omega, np.zeros(6), W))
        assert W2.includes(W) and W.includes(W2)


@pytest.mark.parametrize("vectors, expected", [
    ((0, 1), "lagrangian"),
    ((0,), "isotropic"),
    ((0, 2), "symplectic"),
    ((0, 1, 2), "coisotropic"),
])
def test_classify_subspace(vectors, expected):
    assert classify_subspace(SYMPLECTIC_R4, ORIGIN, span(*(e(i) for i in vectors))) == expected


def test_restricted_kernel_of_coisotropic_hypersurface():
    W = span(e(1), e(2), e(3))  # tangent to q1 = 0
    K = restricted_kernel(SYMPLECTIC_R4, ORIGIN, W)
    X_q1 = hamiltonian_vector_field(SYMPLECTIC_R4, ORIGIN, e(0))
    assert K.dim == 1 and K.contains(X_q1)


def test_restricted_kernel_of_full_symplectic_space():
    assert restricted_kernel(SYMPLECTIC_R4, ORIGIN, Subspace.full(4)).dim == 0


# -- Hamilton's equation -----------------------------------------------------------

def test_sign_convention():
    # Omega^T X = dH
    omega = TwoFormField([[0, 1], [-1, 0]])
    X = hamiltonian_vector_field(omega, np.zeros(2), [1.0, 0.0])
    assert np.allclose(X, [0.0, -1.0])


def test_zero_differential_gives_kernel_freedom():
    omega = TwoFormField([[0, 1, 0], [-1, 0, 0], [0, 0, 0]])
    sol = solve_hamilton(omega, np.zeros(3), np.zeros(3))
    assert np.array_equal(sol.particular, np.zeros(3))
    assert sol.freedom.equals(kernel(omega, np.zeros(3)))


def test_zero_form_is_infeasible():
    with pytest.raises(Infeasible):
        solve_hamilton(TwoFormField(np.zeros((2, 2))), np.zeros(2), [1.0, 0.0])


def test_degenerate_form_outside_range_is_infeasible():
    omega = TwoFormField([[0, 1, 0], [-1, 0, 0], [0, 0, 0]])
    with pytest.raises(Infeasible):
        hamiltonian_vector_field(omega, np.zeros(3), [0.0, 0.0, 1.0])


def test_rank_two_form_in_range(rng):
    for _ in range(10):
        B = rng.normal(size=(2, 4))
        m = B.T @ canonical_form([(0, 1)], 2) @ B
        X0 = rng.normal(size=4)
        dH = m.T @ X0
        sol = solve_hamilton(TwoFormField(m), np.zeros(4), dH)
        assert np.linalg.norm(m.T @ sol.particular - dH) <= 1e-12
        assert sol.freedom.dim == 2
