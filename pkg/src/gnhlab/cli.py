"""Command line entry point: analyze, evolve, check, split-metric."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, default_config
from .slicing import SignatureError, split_metric, volume_factor

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_EMPTY = 2
EXIT_CONFIG = 3
EXIT_BLOWUP = 4


def _load(args) -> RunConfig:
    cfg = RunConfig.load(args.config)
    return cfg.with_overrides(seed=args.seed, eps_rank=args.tol_rank, eps_con=args.tol_con)


def _out_path(args, cfg: RunConfig, key: str) -> Path | None:
    if args.out:
        return Path(args.out)
    path = cfg.outputs.get(key)
    return Path(path) if path else None


def cmd_analyze(args) -> int:
    from .integrator import analysis
    from .report import dumps, report_dict, validate_report

    cfg = _load(args)
    theory = cfg.build_theory()
    rep = analysis(theory, cfg.tolerances)
    data = report_dict(cfg.theory_name, rep)
    validate_report(data)
    text = dumps(data)
    path = _out_path(args, cfg, "report_path")
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)
    if rep.empty_set:
        return EXIT_EMPTY
    return EXIT_OK if rep.terminated else EXIT_FAIL


def cmd_evolve(args) -> int:
    from .constraints import project_to_constraints
    from .integrator import BlowUpError, evolve, final_constraints

    cfg = _load(args)
    theory = cfg.build_theory()
    integ = cfg.integrator
    tol = cfg.tolerances
    x0 = theory.sample_on_shell(np.random.default_rng(cfg.rng_seed))
    constraints = final_constraints(theory, tol) if integ["project_every"] else None
    if constraints is not None:
        x0 = project_to_constraints(x0, constraints, tol.projection_tol, tol.max_iter, tol.eps_rank)
    path = _out_path(args, cfg, "series_path")
    try:
        series = evolve(theory, x0, integ["dt"], integ["steps"], project_every=integ["project_every"],
                        constraints=constraints, tol=tol)
        code = EXIT_OK
    except BlowUpError as err:
        print(f"error: {err}", file=sys.stderr)
        series = err.series
        code = EXIT_BLOWUP
    text = series.to_csv(path)
    if path is None:
        sys.stdout.write(text)
    return code


def cmd_check(args) -> int:
    from .checks import run_suite

    if args.config:
        cfgs = [_load(args)]
    else:
        names = args.theory or ["particle", "maxwell", "chern_simons", "string"]
        cfgs = [default_config(n, args.seed or 0) for n in names]
    theories = [c.build_theory() for c in cfgs]
    results = run_suite(theories, cfgs[0].rng_seed, cfgs[0].tolerances, corrupt_omega=args.corrupt_omega,
                        report=lambda r: print(r.line(), flush=True))
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_FAIL


def cmd_split_metric(args) -> int:
    try:
        entries = [float(v) for v in args.entries]
    except ValueError:
        raise ConfigError("metric entries must be numbers") from None
    n = int(round(np.sqrt(len(entries))))
    if n * n != len(entries) or n < 2:
        raise ConfigError("give (n+1)^2 metric entries in row-major order")
    g = np.array(entries).reshape(n, n)
    try:
        ls = split_metric(g)
    except SignatureError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FAIL
    out = {"N": float(ls.N), "M": ls.M.tolist(), "gamma": ls.gamma.tolist(), "sqrt_minus_g": volume_factor(ls)}
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gnhlab", description="Constraint analysis and evolution of "
                                     "discretized constrained Hamiltonian theories.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="path to a JSON run configuration")
        p.add_argument("--out", help="output path (overrides the config)")
        p.add_argument("--seed", type=int, help="override seeds.rng_seed")
        p.add_argument("--tol-rank", type=float, help="override tolerances.eps_rank")
        p.add_argument("--tol-con", type=float, help="override tolerances.eps_con")

    p = sub.add_parser("analyze", help="run the constraint algorithm and write a JSON report")
    common(p)
    p.set_defaults(func=cmd_analyze)
    p = sub.add_parser("evolve", help="integrate the evolution equations and write a CSV time series")
    common(p)
    p.set_defaults(func=cmd_evolve)
    p = sub.add_parser("check", help="run the invariant suite")
    common(p, config_required=False)
    p.add_argument("--theory", action="append", choices=["particle", "maxwell", "chern_simons", "string"],
                   help="restrict the default-config suite to these theories")
    p.add_argument("--corrupt-omega", action="store_true", help="inject a symmetric part into the form")
    p.set_defaults(func=cmd_check)
    p = sub.add_parser("split-metric", help="lapse, shift and spatial metric of a spacetime metric")
    p.add_argument("entries", nargs="+", help="metric entries, row-major")
    p.set_defaults(func=cmd_split_metric)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
