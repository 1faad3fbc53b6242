"""Solver configuration and result records shared by both formulations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

OPTIMAL = "optimal"
NOT_CONVERGED = "not-converged"
INFINITE = "infinite"
UNBOUNDED = "apparently-unbounded"


@dataclass(frozen=True)
class SolverConfig:
    starts: int = 8
    max_iter: int = 5000
    tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("starts must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def rng(self, start):
        # independent per-start stream, so results do not depend on execution order
        return np.random.default_rng([self.seed, start])


@dataclass
class OptimizeReport:
    value: float
    argument: object
    iterations: int
    converged: bool
    grad_norm: float
    starts: int
    method: str
    status: str = OPTIMAL
    certificate: object = None
    start_index: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def infinite(self):
        return self.status == INFINITE

    @property
    def value_sq(self):
        return self.value * self.value if math.isfinite(self.value) else math.inf


def best_of(reports):
    """Deterministic merge: max value, ties to the lowest start index."""
    best = None
    for r in reports:
        if best is None or r.value > best.value or (r.value == best.value and r.start_index < best.start_index):
            best = r
    return best
