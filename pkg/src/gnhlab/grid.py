"""Uniform periodic grids with centered differences.

Nodal fields are stored flat as (nodes, components) with nodes in
lexicographic (C) order of their integer coordinates.  Every operator works
on numpy and jax arrays alike.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from ._jax import jnp


def _xp(a):
    return np if isinstance(a, np.ndarray) else jnp


@dataclass(frozen=True)
class Grid:
    spatial_dim: int
    nodes_per_dim: int
    spacing: float = 1.0

    def __post_init__(self):
        if self.spatial_dim not in (0, 1, 2, 3):
            raise ValueError("spatial_dim must be 0, 1, 2 or 3")
        if self.spatial_dim > 0 and self.nodes_per_dim < 2:
            raise ValueError("nodes_per_dim must be at least 2")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")

    @property
    def nodes(self) -> int:
        return self.nodes_per_dim ** self.spatial_dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.nodes_per_dim,) * self.spatial_dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.spatial_dim

    @property
    def length(self) -> float:
        return self.nodes_per_dim * self.spacing

    def node_labels(self) -> list[str]:
        return ["(" + ",".join(str(i) for i in idx) + ")" for idx in product(range(self.nodes_per_dim),
                                                                             repeat=self.spatial_dim)]

    def coordinates(self) -> np.ndarray:
        """Node positions, shape (nodes, spatial_dim)."""
        idx = np.array(list(product(range(self.nodes_per_dim), repeat=self.spatial_dim)), dtype=float)
        return idx.reshape(self.nodes, self.spatial_dim) * self.spacing

    def diff(self, f, axis: int):
        """Centered difference (f[i+1] - f[i-1]) / (2 spacing) along ``axis``.

        ``f`` has shape (nodes,) or (nodes, comps).
        """
        if not 0 <= axis < self.spatial_dim:
            raise ValueError(f"axis {axis} out of range")
        xp = _xp(f)
        trailing = f.shape[1:]
        g = xp.reshape(f, self.shape + trailing)
        d = (xp.roll(g, -1, axis=axis) - xp.roll(g, 1, axis=axis)) / (2.0 * self.spacing)
        return xp.reshape(d, (self.nodes,) + trailing)

    def gradient(self, f):
        """Stack of D_i f along a new last axis: (nodes, spatial_dim) for scalar f."""
        xp = _xp(f)
        return xp.stack([self.diff(f, i) for i in range(self.spatial_dim)], axis=-1)

    def divergence(self, v):
        """sum_i D_i v[:, i]."""
        return sum(self.diff(v[:, i], i) for i in range(self.spatial_dim))

    def integrate(self, f):
        """Cell-volume-weighted sum over nodes."""
        return self.cell_volume * _xp(f).sum(f)

    def difference_matrix(self, axis: int) -> np.ndarray:
        """Dense matrix of ``diff`` along ``axis`` acting on scalar fields."""
        return np.stack([self.diff(e, axis) for e in np.eye(self.nodes)], axis=1)

    def gradient_matrix(self) -> np.ndarray:
        """Dense (nodes*spatial_dim, nodes) matrix of the discrete gradient."""
        return np.vstack([self.difference_matrix(i) for i in range(self.spatial_dim)])
