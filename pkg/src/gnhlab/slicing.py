"""Lapse-shift splitting of a Lorentzian metric at a spacelike slice.

Signature is (-, +, ..., +).  Index 0 is the slicing direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SignatureError(ValueError):
    """The slice is not spacelike for the given metric."""


@dataclass(frozen=True)
class LapseShift:
    """Lapse N, shift M^i (contravariant) and spatial metric gamma_ij.

    Fields may carry a leading node axis: N (nodes,), M (nodes, n),
    gamma (nodes, n, n).
    """

    N: np.ndarray
    M: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        N = np.asarray(self.N, dtype=float)
        M = np.asarray(self.M, dtype=float)
        gamma = np.asarray(self.gamma, dtype=float)
        if gamma.shape[-1] != gamma.shape[-2] or M.shape[-1] != gamma.shape[-1]:
            raise ValueError("shift and spatial metric dimensions disagree")
        if np.any(N <= 0):
            raise SignatureError("lapse must be positive")
        if not np.allclose(gamma, np.swapaxes(gamma, -1, -2), rtol=0, atol=1e-14 * max(1.0, np.abs(gamma).max())):
            raise ValueError("spatial metric must be symmetric")
        if np.any(np.linalg.eigvalsh(gamma) <= 0):
            raise SignatureError("spatial metric is not positive definite")
        for name, v in (("N", N), ("M", M), ("gamma", gamma)):
            v.flags.writeable = False
            object.__setattr__(self, name, v)

    @property
    def dim(self) -> int:
        return self.gamma.shape[-1]

    @classmethod
    def minkowski(cls, dim: int = 3) -> "LapseShift":
        return cls(np.array(1.0), np.zeros(dim), np.eye(dim))

    @property
    def covariant_shift(self) -> np.ndarray:
        return np.einsum("...ij,...j->...i", self.gamma, self.M)

    @property
    def sqrt_det_gamma(self) -> np.ndarray:
        return np.sqrt(np.linalg.det(self.gamma))


@dataclass(frozen=True)
class SlicingGenerator:
    """Generator zeta = zeta0 d/dt + zeta^i d/dx^i plus an internal gauge part chi (per node)."""

    zeta0: float
    zeta: np.ndarray
    chi: np.ndarray | float = 0.0

    def __post_init__(self):
        zeta = np.asarray(self.zeta, dtype=float).reshape(-1)
        chi = np.asarray(self.chi, dtype=float)
        zeta.flags.writeable = False
        chi.flags.writeable = False
        object.__setattr__(self, "zeta0", float(self.zeta0))
        object.__setattr__(self, "zeta", zeta)
        object.__setattr__(self, "chi", chi)

    @property
    def transverse(self) -> bool:
        return self.zeta0 != 0.0

    def combine(self, a: float, other: "SlicingGenerator", b: float) -> "SlicingGenerator":
        """The generator a*self + b*other."""
        return SlicingGenerator(a * self.zeta0 + b * other.zeta0, a * self.zeta + b * other.zeta,
                                a * self.chi + b * other.chi)

    def scaled(self, a: float) -> "SlicingGenerator":
        return SlicingGenerator(a * self.zeta0, a * self.zeta, a * self.chi)


def split_metric(g) -> LapseShift:
    """(N, M^i, gamma_ij) from a spacetime metric, or a stack of them."""
    g = np.asarray(g, dtype=float)
    if g.shape[-1] != g.shape[-2] or g.shape[-1] < 2:
        raise ValueError("metric must be square with at least two dimensions")
    if not np.allclose(g, np.swapaxes(g, -1, -2), rtol=0, atol=1e-14 * max(1.0, np.abs(g).max())):
        raise ValueError("metric must be symmetric")
    gamma = g[..., 1:, 1:]
    if np.any(np.linalg.eigvalsh(gamma) <= 0):
        raise SignatureError("slice is not spacelike: spatial block is not positive definite")
    m_low = g[..., 0, 1:]
    m_up = np.linalg.solve(gamma, m_low[..., None])[..., 0]
    n2 = np.einsum("...i,...i->...", m_low, m_up) - g[..., 0, 0]
    if np.any(n2 <= 0):
        raise SignatureError("slice is not spacelike: M_k M^k - g_00 <= 0")
    return LapseShift(np.sqrt(n2), m_up, gamma)


def reconstruct_metric(ls: LapseShift) -> np.ndarray:
    """Covariant metric: g_00 = M_k M^k - N^2, g_0i = M_i, g_ij = gamma_ij."""
    m_low = ls.covariant_shift
    n = ls.dim
    shape = np.broadcast_shapes(np.shape(ls.N), m_low.shape[:-1], ls.gamma.shape[:-2])
    g = np.zeros(shape + (n + 1, n + 1))
    g[..., 0, 0] = np.einsum("...i,...i->...", m_low, ls.M) - ls.N**2
    g[..., 0, 1:] = m_low
    g[..., 1:, 0] = m_low
    g[..., 1:, 1:] = ls.gamma
    return g


def contravariant_metric(ls: LapseShift) -> np.ndarray:
    """Inverse metric: g^00 = -1/N^2, g^0i = M^i/N^2, g^ij = gamma^ij - M^i M^j / N^2."""
    n = ls.dim
    inv_gamma = np.linalg.inv(ls.gamma)
    N2 = np.asarray(ls.N, dtype=float) ** 2
    shape = np.broadcast_shapes(np.shape(N2), ls.M.shape[:-1], ls.gamma.shape[:-2])
    out = np.zeros(shape + (n + 1, n + 1))
    out[..., 0, 0] = -1.0 / N2
    out[..., 0, 1:] = ls.M / N2[..., None]
    out[..., 1:, 0] = ls.M / N2[..., None]
    out[..., 1:, 1:] = inv_gamma - np.einsum("...i,...j->...ij", ls.M, ls.M) / N2[..., None, None]
    return out


def volume_factor(ls: LapseShift) -> np.ndarray | float:
    """sqrt(-det g) = N sqrt(det gamma)."""
    v = ls.N * ls.sqrt_det_gamma
    return float(v) if np.ndim(v) == 0 else v


@dataclass(frozen=True)
class EffectiveGenerator:
    perp: np.ndarray | float
    parallel: np.ndarray


def effective_generator(zg: SlicingGenerator, ls: LapseShift) -> EffectiveGenerator:
    """Normal part zeta0*N and tangential part zeta0*M^i + zeta^i."""
    perp = zg.zeta0 * ls.N
    parallel = zg.zeta0 * ls.M + zg.zeta
    return EffectiveGenerator(float(perp) if np.ndim(perp) == 0 else perp, parallel)


def random_lapse_shift(rng: np.random.Generator, dim: int = 3) -> LapseShift:
    """Random admissible slicing data: N in [0.5, 2], |M| ~ 1, gamma SPD."""
    a = rng.normal(size=(dim, dim))
    gamma = a @ a.T + 0.5 * np.eye(dim)
    return LapseShift(rng.uniform(0.5, 2.0), rng.normal(size=dim), gamma)
