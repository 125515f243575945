"""Shared builders for the test suite."""

import functools

from gnhlab.config import default_config
from gnhlab.integrator import analysis


@functools.lru_cache(maxsize=None)
def default_theory(name: str):
    """Theory built from its default configuration, shared across tests."""
    return default_config(name).build_theory()


def default_report(name: str):
    return analysis(default_theory(name), default_config(name).tolerances)
