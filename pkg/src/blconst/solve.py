"""Method dispatch shared by the CLI and the path probes."""
from __future__ import annotations

import math

from .barthe import flatten_exponents, optimize_barthe
from .finiteness import decide_finiteness
from .gaussian import optimize_lieb
from .report import INFINITE, OptimizeReport, SolverConfig

METHODS = ("lieb", "barthe", "auto")
AUTO_MAX_K = 12


def resolve_method(datum, method):
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        return "barthe" if flatten_exponents(datum).K <= AUTO_MAX_K else "lieb"
    return method


def solve(datum, method="auto", config: SolverConfig | None = None, budget=64):
    """Finiteness check followed by the chosen optimizer.

    Returns ``(report, verdict)``. Infinite data yield a report with status
    ``infinite`` whose certificate is the finiteness verdict (or the Barthe
    divergence ray, when only the optimizer detects it).
    """
    config = config or SolverConfig()
    method = resolve_method(datum, method)
    verdict = decide_finiteness(datum, budget=budget, seed=config.seed)
    if verdict.infinite:
        report = OptimizeReport(math.inf, None, 0, True, 0.0, 0, method, INFINITE, verdict)
        return report, verdict
    if method == "lieb":
        return optimize_lieb(datum, config, verdict=verdict), verdict
    return optimize_barthe(datum, config), verdict
