"""Run configuration: JSON loading, schema validation and theory construction."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .constraints import Tolerances
from .grid import Grid
from .slicing import LapseShift, SignatureError, SlicingGenerator
from .theories import BUILDERS, TargetMetric, TheorySpec

DEFAULT_NODES = {"maxwell": 3, "chern_simons": 3, "string": 8}
SPATIAL_DIM = {"maxwell": 3, "chern_simons": 2, "string": 1}


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


def load_schema(name: str) -> dict:
    return json.loads(resources.files("gnhlab").joinpath("schemas", name).read_text())


@dataclass
class RunConfig:
    raw: dict

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        try:
            jsonschema.validate(data, load_schema("config.schema.json"))
        except jsonschema.ValidationError as err:
            raise ConfigError(f"invalid config: {err.message}") from None
        cfg = cls(copy.deepcopy(data))
        cfg.tolerances  # validates values
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as err:
            raise ConfigError(f"cannot read config {path}: {err}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    # -- sections -----------------------------------------------------------------
    @property
    def theory_name(self) -> str:
        return self.raw["theory"]["name"]

    @property
    def rng_seed(self) -> int:
        return int(self.raw["seeds"]["rng_seed"])

    @property
    def seed_count(self) -> int:
        return int(self.raw["seeds"].get("count", 3))

    @property
    def tolerances(self) -> Tolerances:
        t = self.raw.get("tolerances", {})
        try:
            return Tolerances(eps_rank=t.get("eps_rank", 1e-9), eps_con=t.get("eps_con", 1e-8),
                              fd_step=t.get("fd_step", 1e-5))
        except ValueError as err:
            raise ConfigError(str(err)) from None

    @property
    def integrator(self) -> dict:
        i = self.raw.get("integrator", {})
        return {"dt": float(i.get("dt", 0.01)), "steps": int(i.get("steps", 100)),
                "project_every": i.get("project_every")}

    @property
    def outputs(self) -> dict:
        return dict(self.raw.get("outputs", {}))

    def with_overrides(self, seed: int | None = None, eps_rank: float | None = None,
                       eps_con: float | None = None) -> "RunConfig":
        data = copy.deepcopy(self.raw)
        if seed is not None:
            data["seeds"]["rng_seed"] = seed
        tol = data.setdefault("tolerances", {})
        if eps_rank is not None:
            tol["eps_rank"] = eps_rank
        if eps_con is not None:
            tol["eps_con"] = eps_con
        return RunConfig.from_dict(data)

    # -- construction ---------------------------------------------------------------
    def _nodes(self) -> int:
        if self.theory_name == "particle":
            return 1
        n = self.raw.get("grid", {}).get("nodes_per_dim", DEFAULT_NODES[self.theory_name])
        return n ** SPATIAL_DIM[self.theory_name]

    def generator(self) -> SlicingGenerator:
        name = self.theory_name
        s = self.raw.get("slicing", {})
        if name == "particle":
            spatial = self.raw["theory"].get("dim", 4) - 1
            zeta0 = s.get("zeta0", 0.0)
        else:
            spatial = SPATIAL_DIM[name]
            zeta0 = s.get("zeta0", 1.0)
        zeta = np.asarray(s.get("zeta", [0.0] * spatial), dtype=float)
        if zeta.shape != (spatial,):
            raise ConfigError(f"slicing.zeta must have {spatial} entries")
        mode = s.get("chi_mode", "zero")
        nodes = self._nodes()
        if mode == "zero":
            chi = np.zeros(nodes)
        elif mode == "random":
            chi = np.random.default_rng(s.get("chi_seed", self.rng_seed)).normal(size=nodes)
        else:
            chi = np.asarray(s.get("chi", []), dtype=float)
            if chi.shape != (nodes,):
                raise ConfigError(f"slicing.chi must have {nodes} entries")
        return SlicingGenerator(zeta0, zeta, chi)

    def lapse_shift(self) -> LapseShift | None:
        ls = self.raw.get("lapse_shift")
        if ls is None:
            return None
        try:
            return LapseShift(ls["N"], np.asarray(ls["M"], dtype=float), np.asarray(ls["gamma"], dtype=float))
        except (SignatureError, ValueError) as err:
            raise ConfigError(f"lapse_shift: {err}") from None

    def _target(self, dim: int) -> TargetMetric:
        t = self.raw["theory"].get("target", "minkowski")
        if t == "minkowski":
            return TargetMetric.minkowski(dim)
        if t == "euclidean":
            return TargetMetric.euclidean(dim)
        return TargetMetric(np.asarray(t, dtype=float))

    def build_theory(self) -> TheorySpec:
        name = self.theory_name
        th = self.raw["theory"]
        gen = self.generator()
        common = {"generator": gen, "seeds": self.seed_count, "rng_seed": self.rng_seed}
        try:
            if name == "particle":
                dim = th.get("dim", 4)
                return BUILDERS[name](dim=dim, m=th.get("m", 1.0), target=self._target(dim), k=th.get("k"),
                                      **common)
            grid_cfg = self.raw.get("grid", {})
            grid = Grid(SPATIAL_DIM[name], grid_cfg.get("nodes_per_dim", DEFAULT_NODES[name]),
                        grid_cfg.get("spacing", 1.0))
            if name == "maxwell":
                return BUILDERS[name](grid=grid, lapse_shift=self.lapse_shift(), **common)
            if name == "chern_simons":
                return BUILDERS[name](grid=grid, **common)
            target = self._target(th.get("target_dim", 2) if isinstance(th.get("target", "minkowski"), str)
                                  else len(th["target"]))
            return BUILDERS[name](grid=grid, target=target, lapse_shift=self.lapse_shift(), h=th.get("h"),
                                  **common)
        except (ValueError, SignatureError) as err:
            raise ConfigError(f"{name}: {err}") from None


def default_config(theory: str, rng_seed: int = 0) -> RunConfig:
    """The configuration used by the check suite and the documentation examples."""
    if theory not in BUILDERS:
        raise ConfigError(f"unknown theory {theory!r}")
    return RunConfig.from_dict({"theory": {"name": theory}, "seeds": {"count": 3, "rng_seed": rng_seed}})
