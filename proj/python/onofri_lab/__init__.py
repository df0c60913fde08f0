"""Python front end for the onofri-lab C++ core."""

import json

from . import _core
from ._core import ConvergenceError, DomainError, bubble_report, branch, integrate, run_cli

__all__ = [
    "ConvergenceError",
    "DomainError",
    "branch",
    "bubble_report",
    "config_search",
    "integrate",
    "minimize",
    "run_cli",
]


def config_search(n, even=False, starts=200, seed=1):
    """Minimal ||Lambda_infty||^2 over centered n-atom measures, as a dict."""
    return json.loads(_core.config_search(n, even, starts, seed))


def minimize(a, c0=0.5, seed=1, amplitude=0.1):
    """One constrained descent run from a seeded random axisymmetric start."""
    return json.loads(_core.minimize(a, c0, seed, amplitude))
