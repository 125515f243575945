"""Exact rational constraint chain for constant forms and homogeneous quadratic Hamiltonians.

Each level is a linear subspace C. Its polar is {v in C1 : v^T Omega w = 0 for all w in C}, with C1 the zero set of the
primaries; the next level keeps the points p of C with v^T S p = 0 for every polar vector v (dH = S p).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp


@dataclass(frozen=True)
class LinearChain:
    dims: tuple[int, ...]

    @property
    def chain_length(self) -> int:
        return len(self.dims)

    @property
    def final_set_dim(self) -> int:
        return self.dims[-1]


def _basis(vectors: list, n: int) -> sp.Matrix:
    return sp.Matrix.hstack(*vectors) if vectors else sp.zeros(n, 0)


def linear_chain(omega, hessian, primaries=None) -> LinearChain:
    """Levels of the chain for H(x) = x^T S x / 2 and linear primaries given as rows."""
    om = sp.Matrix(omega).applyfunc(sp.nsimplify)
    S = sp.Matrix(hessian).applyfunc(sp.nsimplify)
    n = om.shape[0]
    rows = sp.Matrix(primaries).applyfunc(sp.nsimplify) if primaries is not None else sp.zeros(0, n)
    dims: list[int] = []
    C1 = None
    while True:
        C = _basis(rows.nullspace(), n) if rows.rows else sp.eye(n)
        C1 = C if C1 is None else C1
        dims.append(C.shape[1])
        if C.shape[1] == 0:
            return LinearChain(tuple(dims))
        coeffs = (C1.T * om * C).T.nullspace()
        polar = _basis([C1 * a for a in coeffs], n)
        new = (polar.T * S) if polar.shape[1] else sp.zeros(0, n)
        stacked = sp.Matrix.vstack(rows, new) if rows.rows else new
        if stacked.rank() == rows.rank():
            return LinearChain(tuple(dims))
        rows = stacked


def random_system(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Integer form of random even rank, sparse integer symmetric Hessian, and up to two linear primaries."""
    half = int(rng.integers(0, n // 2 + 1))
    B = rng.integers(-2, 3, size=(2 * half, n)) * (rng.random((2 * half, n)) < 0.5)
    J = np.zeros((2 * half, 2 * half), dtype=int)
    for i in range(half):
        J[i, half + i], J[half + i, i] = 1, -1
    omega = B.T @ J @ B
    A = rng.integers(-2, 3, size=(n, n)) * (rng.random((n, n)) < rng.uniform(0.05, 0.5))
    primaries = rng.integers(-1, 2, size=(int(rng.integers(0, 3)), n))
    return omega.astype(float), (A + A.T).astype(float), primaries.astype(float)
