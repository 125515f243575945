"""Serialization of constraint-algorithm reports."""

from __future__ import annotations

import json
from collections import Counter

import jsonschema

from .config import load_schema
from .constraints import GnhReport

REPORT_VERSION = "1.0"


def report_dict(theory: str, report: GnhReport) -> dict:
    levels = []
    for lvl in report.levels:
        levels.append({
            "level": lvl.level,
            "constraints": [{
                "name": r.name,
                "node": r.node,
                "class": r.class_tag,
                "provenance": r.provenance,
                "dependent": bool(r.dependent),
                "space": "ambient" if r.ambient else "chart",
            } for r in lvl.new_constraints],
            "tangent_dim": int(lvl.tangent_dim),
            "polar_dim": int(lvl.polar_dim),
            "generated": int(lvl.generated),
        })
    counts = Counter(f"level{r.level}:{r.class_tag}" for lvl in report.levels for r in lvl.new_constraints)
    return {
        "version": REPORT_VERSION,
        "theory": theory,
        "levels": levels,
        "final_set_dim": int(report.final_set_dim),
        "gauge_dim": int(report.gauge_dim),
        "kinematic_dim": int(report.kinematic_dim),
        "terminated": bool(report.terminated),
        "warnings": list(report.warnings),
        "class_counts": dict(sorted(counts.items())),
    }


def validate_report(data: dict) -> None:
    jsonschema.validate(data, load_schema("report.schema.json"))


def dumps(data: dict) -> str:
    """Canonical JSON text: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(data, indent=2, sort_keys=True) + "\n"
