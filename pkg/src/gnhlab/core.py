"""Finite-dimensional (pre)symplectic linear algebra at a point.

Conventions: ``Omega[i, j] = omega(e_i, e_j)`` and Hamilton's equation is the
matrix equation ``Omega.T @ X = dH``.  With ``omega = dq ^ dp`` this gives
``X^q = dH/dp`` and ``X^p = -dH/dq``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

EPS_RANK = 1e-9
ANTISYMMETRY_TOL = 1e-14


class MalformedFormError(ValueError):
    """Raised when a two-form matrix is not antisymmetric."""


class Infeasible(ArithmeticError):
    """Hamilton's equation has no solution at the point."""

    def __init__(self, residual: float, message: str = "dH is not in the range of Omega^T"):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class Block:
    name: str
    node_count: int
    components: int
    offset: int

    @property
    def size(self) -> int:
        return self.node_count * self.components

    @property
    def slice(self) -> slice:
        return slice(self.offset, self.offset + self.size)


class BlockLayout:
    """Named contiguous blocks of a flat coordinate vector, node-major inside each block."""

    def __init__(self, blocks: Sequence[tuple[str, int, int]]):
        built = []
        offset = 0
        for name, node_count, components in blocks:
            if node_count < 1 or components < 1:
                raise ValueError(f"block {name!r} must have positive size")
            built.append(Block(name, int(node_count), int(components), offset))
            offset += node_count * components
        names = [b.name for b in built]
        if len(set(names)) != len(names):
            raise ValueError("block names must be unique")
        self.blocks: tuple[Block, ...] = tuple(built)
        self.total_dim: int = offset
        self._by_name = {b.name: b for b in built}

    def __repr__(self) -> str:
        inner = ", ".join(f"{b.name}[{b.node_count}x{b.components}]" for b in self.blocks)
        return f"BlockLayout({inner})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, BlockLayout) and self.blocks == other.blocks

    def __hash__(self) -> int:
        return hash(self.blocks)

    def __iter__(self) -> Iterator[Block]:
        return iter(self.blocks)

    def block(self, name: str) -> Block:
        return self._by_name[name]

    def slice(self, name: str) -> slice:
        return self._by_name[name].slice

    def view(self, coords, name: str):
        """Block ``name`` of a flat array, reshaped to (node_count, components).

        Works for numpy and jax arrays alike.
        """
        b = self._by_name[name]
        return coords[b.slice].reshape(b.node_count, b.components)

    def index(self, name: str, node: int, component: int) -> int:
        b = self._by_name[name]
        if not (0 <= node < b.node_count and 0 <= component < b.components):
            raise IndexError(f"({node}, {component}) out of range for block {name!r}")
        return b.offset + node * b.components + component

    def locate(self, i: int) -> tuple[str, int, int]:
        """Inverse of :meth:`index`: (block name, node, component) of coordinate ``i``."""
        for b in self.blocks:
            if b.offset <= i < b.offset + b.size:
                node, comp = divmod(i - b.offset, b.components)
                return b.name, node, comp
        raise IndexError(i)

    def assemble(self, **parts) -> np.ndarray:
        """Flat vector from per-block arrays; missing blocks are zero."""
        x = np.zeros(self.total_dim)
        for name, value in parts.items():
            b = self._by_name[name]
            x[b.slice] = np.asarray(value, dtype=float).reshape(-1)
        return x


@dataclass(frozen=True)
class StateVector:
    coords: np.ndarray
    layout: BlockLayout

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).reshape(-1)
        if c.shape[0] != self.layout.total_dim:
            raise ValueError(f"expected {self.layout.total_dim} coordinates, got {c.shape[0]}")
        c.flags.writeable = False
        object.__setattr__(self, "coords", c)

    def block(self, name: str) -> np.ndarray:
        return self.layout.view(self.coords, name)

    def replace(self, coords) -> "StateVector":
        return StateVector(coords, self.layout)


def as_coords(p) -> np.ndarray:
    """Coordinates of a StateVector, or the array itself."""
    if isinstance(p, StateVector):
        return p.coords
    return np.asarray(p, dtype=float).reshape(-1)


def check_antisymmetric(omega: np.ndarray, tol: float = ANTISYMMETRY_TOL) -> None:
    scale = np.max(np.abs(omega)) if omega.size else 0.0
    defect = np.max(np.abs(omega + omega.T)) if omega.size else 0.0
    if defect > tol * scale:
        raise MalformedFormError(f"two-form is not antisymmetric (defect {defect:.3e}, scale {scale:.3e})")


class TwoFormField:
    """A possibly point-dependent antisymmetric form on state space.

    ``matrix_fn`` maps flat coordinates to the matrix; it may be written with
    jax.numpy so that generated constraints can differentiate through it.
    """

    def __init__(self, matrix=None, matrix_fn: Callable | None = None, dim: int | None = None):
        if (matrix is None) == (matrix_fn is None):
            raise ValueError("pass exactly one of matrix or matrix_fn")
        if matrix is not None:
            m = np.array(matrix, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError("two-form matrix must be square")
            m.flags.writeable = False
            self._matrix = m
            self._fn = None
            self.dim = m.shape[0]
        else:
            if dim is None:
                raise ValueError("dim is required with matrix_fn")
            self._matrix = None
            self._fn = matrix_fn
            self.dim = int(dim)

    @property
    def constant(self) -> bool:
        return self._matrix is not None

    def raw(self, x):
        """Unchecked matrix at flat coordinates ``x`` (traceable when built from a function)."""
        return self._matrix if self._matrix is not None else self._fn(x)

    def evaluate(self, p) -> np.ndarray:
        m = np.asarray(self.raw(as_coords(p)), dtype=float)
        check_antisymmetric(m)
        return m


@dataclass(frozen=True)
class Subspace:
    """Subspace of R^n held as an orthonormal column basis.

    Inclusion decisions compare orthonormal residuals against sqrt(eps_rank),
    which sits far above SVD noise and far below genuine angles.
    """

    basis: np.ndarray
    ambient_dim: int = field(default=-1)

    def __post_init__(self):
        b = np.array(self.basis, dtype=float)
        if b.ndim == 1:
            b = b.reshape(-1, 1)
        n = self.ambient_dim if self.ambient_dim >= 0 else b.shape[0]
        if b.shape[0] != n:
            raise ValueError("basis rows must equal ambient_dim")
        b.flags.writeable = False
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "ambient_dim", n)

    @classmethod
    def span(cls, vectors, ambient_dim: int | None = None, eps_rank: float = EPS_RANK) -> "Subspace":
        """Orthonormal basis for the column span, dropping directions below eps_rank*sigma_max."""
        v = np.asarray(vectors, dtype=float)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        n = v.shape[0] if ambient_dim is None else ambient_dim
        if v.size == 0:
            return cls.zero(n)
        u, s, _ = np.linalg.svd(v, full_matrices=False)
        if s.size == 0 or s[0] == 0.0:
            return cls.zero(n)
        r = int(np.sum(s > eps_rank * s[0]))
        return cls(u[:, :r], n)

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(np.zeros((n, 0)), n)

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(np.eye(n), n)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def distance(self, v) -> float:
        """Norm of the component of ``v`` orthogonal to the subspace."""
        v = np.asarray(v, dtype=float)
        return float(np.linalg.norm(v - self.basis @ (self.basis.T @ v)))

    def contains(self, v, eps_rank: float = EPS_RANK) -> bool:
        v = np.asarray(v, dtype=float)
        return self.distance(v) <= np.sqrt(eps_rank) * np.linalg.norm(v)

    def includes(self, other: "Subspace", eps_rank: float = EPS_RANK) -> bool:
        if other.dim == 0:
            return True
        resid = other.basis - self.basis @ (self.basis.T @ other.basis)
        return bool(np.linalg.norm(resid, 2) <= np.sqrt(eps_rank))

    def equals(self, other: "Subspace", eps_rank: float = EPS_RANK) -> bool:
        return self.dim == other.dim and self.includes(other, eps_rank) and other.includes(self, eps_rank)

    def intersect(self, other: "Subspace", eps_rank: float = EPS_RANK) -> "Subspace":
        if self.dim == 0 or other.dim == 0:
            return Subspace.zero(self.ambient_dim)
        # y with (I - P_other) B y = 0
        resid = self.basis - other.basis @ (other.basis.T @ self.basis)
        y = _nullspace(resid, np.sqrt(eps_rank), relative=False)
        return Subspace.span(self.basis @ y, self.ambient_dim, eps_rank)

    def sum(self, other: "Subspace", eps_rank: float = EPS_RANK) -> "Subspace":
        return Subspace.span(np.hstack([self.basis, other.basis]), self.ambient_dim, eps_rank)


def _nullspace(m: np.ndarray, tol: float, relative: bool = True) -> np.ndarray:
    """Orthonormal basis of {y : m y = 0}; singular values <= tol (times sigma_max if relative) count as zero."""
    cols = m.shape[1]
    if m.shape[0] == 0 or cols == 0:
        return np.eye(cols)
    _, s, vt = np.linalg.svd(m, full_matrices=True)
    smax = s[0] if s.size else 0.0
    cut = tol * smax if relative else tol
    r = int(np.sum(s > cut)) if smax > 0 else 0
    return vt[r:].T.copy()


def kernel(omega: TwoFormField, p, eps_rank: float = EPS_RANK) -> Subspace:
    """Basis of ker Omega(p) by singular-value thresholding."""
    m = omega.evaluate(p)
    return Subspace(_nullspace(m, eps_rank), m.shape[0])


def polar(omega: TwoFormField, p, W: Subspace, within: Subspace | None = None,
          eps_rank: float = EPS_RANK) -> Subspace:
    """Symplectic polar {v in within : v^T Omega w = 0 for all w in W}."""
    m = omega.evaluate(p)
    n = m.shape[0]
    within = Subspace.full(n) if within is None else within
    if within.dim == 0:
        return Subspace.zero(n)
    if W.dim == 0:
        return within
    scale = np.linalg.norm(m, 2)
    pairing = W.basis.T @ m.T @ within.basis  # (Omega w)^T v for w in W, v in within
    if scale == 0.0:
        return within
    y = _nullspace(pairing, eps_rank * scale, relative=False)
    return Subspace.span(within.basis @ y, n, eps_rank)


def classify_subspace(omega: TwoFormField, p, W: Subspace, eps_rank: float = EPS_RANK) -> str:
    """One of isotropic, coisotropic, symplectic, lagrangian, mixed."""
    Wp = polar(omega, p, W, eps_rank=eps_rank)
    iso = Wp.includes(W, eps_rank)
    coiso = W.includes(Wp, eps_rank)
    if iso and coiso:
        return "lagrangian"
    if W.dim > 0 and W.intersect(Wp, eps_rank).dim == 0:
        return "symplectic"
    if iso:
        return "isotropic"
    if coiso:
        return "coisotropic"
    return "mixed"


def restricted_kernel(omega: TwoFormField, p, W: Subspace, eps_rank: float = EPS_RANK) -> Subspace:
    """W intersected with its polar: the kernel of omega pulled back to W."""
    return W.intersect(polar(omega, p, W, eps_rank=eps_rank), eps_rank)


@dataclass(frozen=True)
class HamiltonSolution:
    particular: np.ndarray
    freedom: Subspace
    residual: float


def solve_hamilton(omega: TwoFormField, p, dH, eps_rank: float = EPS_RANK) -> HamiltonSolution:
    """Minimum-norm X with Omega^T X = dH, plus the kernel freedom.

    Raises Infeasible when the least-squares residual exceeds eps_rank*|dH|.
    """
    m = omega.evaluate(p)
    dH = np.asarray(dH, dtype=float).reshape(-1)
    n = m.shape[0]
    freedom = Subspace(_nullspace(m, eps_rank), n)
    norm = np.linalg.norm(dH)
    if norm == 0.0:
        return HamiltonSolution(np.zeros(n), freedom, 0.0)
    u, s, vt = np.linalg.svd(m.T)
    smax = s[0] if s.size else 0.0
    r = int(np.sum(s > eps_rank * smax)) if smax > 0 else 0
    coef = (u[:, :r].T @ dH) / s[:r]
    x = vt[:r].T @ coef
    residual = float(np.linalg.norm(m.T @ x - dH))
    if residual > eps_rank * norm:
        raise Infeasible(residual)
    return HamiltonSolution(x, freedom, residual)


def hamiltonian_vector_field(omega: TwoFormField, p, df, eps_rank: float = EPS_RANK) -> np.ndarray:
    """Particular solution X_f of Omega^T X = df."""
    return solve_hamilton(omega, p, df, eps_rank).particular


def canonical_form(pairs: Sequence[tuple[int, int]], dim: int, weight: float = 1.0) -> np.ndarray:
    """Matrix of weight * sum dq_i ^ dp_i for (q index, p index) pairs."""
    m = np.zeros((dim, dim))
    for i, j in pairs:
        m[i, j] += weight
        m[j, i] -= weight
    return m
