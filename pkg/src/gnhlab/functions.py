"""Scalar and vector-valued functions on state space with exact gradients.

Every function is written with jax.numpy so that gradients are exact and so
that constraints generated by the constraint algorithm can be differentiated
through the linear algebra that defines them.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ._jax import jax, jnp
from .core import as_coords


class FunctionFamily:
    """A traceable map R^n -> R^m whose components are named scalar functions."""

    def __init__(self, fn: Callable, names: Sequence[str], nodes: Sequence[str | None] | None = None,
                 label: str | None = None, joint: bool = False):
        self.fn = jax.jit(fn)
        self.names = tuple(names)
        self.nodes = tuple(nodes) if nodes is not None else (None,) * len(self.names)
        if len(self.nodes) != len(self.names):
            raise ValueError("nodes and names must have the same length")
        self.label = label or (self.names[0] if self.names else "empty")
        self._jac = jax.jit(jax.jacrev(self.fn))
        # joint families compile one function returning value and Jacobian
        self.joint = joint
        self._both = jax.jit(self._value_and_jacobian)
        self._cache: dict[str, tuple[bytes, np.ndarray]] = {}

    def _value_and_jacobian(self, x):
        y, pullback = jax.vjp(self.fn, x)
        return y, jax.vmap(pullback)(jnp.eye(y.shape[0], dtype=y.dtype))[0]

    def __len__(self) -> int:
        return len(self.names)

    def __repr__(self) -> str:
        return f"FunctionFamily({self.label!r}, size={len(self)})"

    def _cached(self, kind: str, x: np.ndarray, compute: Callable) -> np.ndarray:
        key = x.tobytes()
        hit = self._cache.get(kind)
        if hit is not None and hit[0] == key:
            return hit[1]
        out = np.asarray(compute(x), dtype=float)
        out.flags.writeable = False
        self._cache[kind] = (key, out)
        return out

    def _fill_both(self, x: np.ndarray) -> None:
        y, jac = self._both(x)
        for kind, out in (("value", y), ("jac", jac)):
            arr = np.asarray(out, dtype=float)
            arr.flags.writeable = False
            self._cache[kind] = (x.tobytes(), arr)

    def values(self, p) -> np.ndarray:
        x = as_coords(p)
        if not self.names:
            return np.zeros(0)
        if self.joint:
            hit = self._cache.get("value")
            if hit is None or hit[0] != x.tobytes():
                self._fill_both(x)
            return self._cache["value"][1]
        return self._cached("value", x, self.fn)

    def jacobian(self, p) -> np.ndarray:
        x = as_coords(p)
        if not self.names:
            return np.zeros((0, x.shape[0]))
        if self.joint:
            hit = self._cache.get("jac")
            if hit is None or hit[0] != x.tobytes():
                self._fill_both(x)
            return self._cache["jac"][1]
        return self._cached("jac", x, self._jac)

    def members(self) -> list["ScalarFunction"]:
        return [ScalarFunction(self, i) for i in range(len(self))]


class ScalarFunction:
    """One component of a FunctionFamily."""

    def __init__(self, family: FunctionFamily, index: int = 0):
        if not 0 <= index < len(family):
            raise IndexError(index)
        self.family = family
        self.index = index

    @classmethod
    def from_callable(cls, fn: Callable, name: str) -> "ScalarFunction":
        """Wrap a traceable scalar function of flat coordinates."""
        return cls(FunctionFamily(lambda x: jnp.reshape(fn(x), (1,)), [name], label=name), 0)

    @property
    def name(self) -> str:
        return self.family.names[self.index]

    @property
    def node(self) -> str | None:
        return self.family.nodes[self.index]

    def __repr__(self) -> str:
        return f"ScalarFunction({self.name!r})"

    def __call__(self, p) -> float:
        return self.value(p)

    def value(self, p) -> float:
        return float(self.family.values(p)[self.index])

    def gradient(self, p) -> np.ndarray:
        return np.array(self.family.jacobian(p)[self.index])

    def trace(self, x):
        """Traceable evaluation for composition inside other jax functions."""
        return self.family.fn(x)[self.index]


def finite_difference_gradient(f: Callable[[np.ndarray], float], x, step: float = 1e-5) -> np.ndarray:
    """Central differences with step ``step*(1+|x|)``."""
    x = np.asarray(x, dtype=float)
    h = step * (1.0 + np.linalg.norm(x))
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def gradient_check(fn: ScalarFunction, x, step: float = 1e-5) -> float:
    """Relative error between the exact gradient and central finite differences."""
    x = as_coords(x)
    exact = fn.gradient(x)
    approx = finite_difference_gradient(lambda y: fn.value(y), x, step)
    scale = max(np.linalg.norm(exact), np.linalg.norm(approx), 1e-300)
    return float(np.linalg.norm(exact - approx) / scale)
