"""Empirical continuity and differentiability probes along paths of data.

Everything here is a numerical experiment: slopes, jumps and Hoelder
exponents are estimates, not bounds.
"""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass

import numpy as np

from .datum import BLDatum, make_datum
from .exceptions import BLError
from .report import INFINITE, SolverConfig
from .solve import solve

SAME_T = 1e-12
FLAT_TOL = 1e-12


def four_linear_reference(a: float) -> float:
    """Closed-form constant for rows (1,0), (0,1), (1,-1), (1,a) with p_j = 1/2."""
    a = float(a)
    sq = 2.0 / (abs(a) + abs(a + 1.0) + 1.0)
    # the min-form has poles at a = 0, -1 where it is read as 1
    terms = [1.0]
    if a != 0.0:
        terms.append(abs(a) ** -0.5)
    if a != -1.0:
        terms.append(abs(a + 1.0) ** -0.5)
    by_min = min(terms)
    by_sum = math.sqrt(sq)
    if abs(by_min - by_sum) > 1e-12:
        raise ArithmeticError(f"closed forms disagree at a={a}: {by_min} vs {by_sum}")
    return by_sum


def general_four_linear_reference(v) -> float:
    """Closed form for four vectors in R^2 with p_j = 1/2; inf when degenerate."""
    v = np.asarray(v, dtype=float).reshape(4, 2)

    def det(i, j):
        return v[i, 0] * v[j, 1] - v[i, 1] * v[j, 0]

    s = abs(det(0, 1) * det(2, 3)) + abs(det(0, 2) * det(1, 3)) + abs(det(0, 3) * det(1, 2))
    if s == 0.0:
        return math.inf
    return math.sqrt(2.0 / s)


@dataclass
class PathSample:
    t: float
    value: float | None  # None when infinite or failed
    infinite: bool
    method: str
    converged: bool
    iterations: int
    seconds: float
    certificate: object = None
    error: str | None = None

    @property
    def finite(self):
        return self.value is not None and not self.infinite


def interpolate(datum_a: BLDatum, datum_b: BLDatum, t: float) -> BLDatum:
    """Entry-wise (1 - t) L_a + t L_b with the shared exponents."""
    check_compatible(datum_a, datum_b)
    maps = [(ea.p, (1.0 - t) * ea.array() + t * eb.array()) for ea, eb in zip(datum_a.maps, datum_b.maps)]
    return make_datum(datum_a.n, maps)


def check_compatible(datum_a, datum_b):
    if datum_a.signature() != datum_b.signature():
        raise ValueError("path endpoints must share n, target dimensions and exponents")


def evaluate_at(datum_a, datum_b, t, method="barthe", config=None, budget=64) -> PathSample:
    config = config or SolverConfig()
    t0 = time.perf_counter()
    try:
        d = interpolate(datum_a, datum_b, t)
        report, _ = solve(d, method, config, budget)
    except (BLError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return PathSample(t, None, False, method, False, 0, time.perf_counter() - t0, error=str(exc))
    secs = time.perf_counter() - t0
    if report.status == INFINITE:
        return PathSample(t, None, True, report.method, True, 0, secs, certificate=report.certificate)
    return PathSample(t, report.value, False, report.method, report.converged, report.iterations, secs)


def sample_path(datum_a, datum_b, grid=11, method="barthe", config=None, budget=64):
    """Samples at t = i / (grid - 1); failures are recorded, not raised."""
    check_compatible(datum_a, datum_b)
    if grid < 2:
        raise ValueError("grid must be >= 2")
    ts = [i / (grid - 1) for i in range(grid)]
    return [evaluate_at(datum_a, datum_b, t, method, config, budget) for t in ts]


def _lookup(samples, t):
    for s in samples:
        if abs(s.t - t) <= SAME_T:
            return s
    return None


@dataclass(frozen=True)
class Slopes:
    left: float
    right: float

    @property
    def jump(self):
        return self.right - self.left


def one_sided_slopes(samples, t0, h, evaluate=None) -> Slopes:
    """Backward and forward difference quotients at t0.

    Missing stencil points are computed with ``evaluate(t) -> PathSample``.
    """
    pts = {}
    for t in (t0 - h, t0, t0 + h):
        s = _lookup(samples, t)
        if s is None:
            if evaluate is None:
                raise ValueError(f"no sample at t={t} and no evaluator given")
            s = evaluate(t)
        if not s.finite:
            raise ValueError(f"non-finite value in stencil at t={t}")
        pts[t] = s.value
    v_l, v_0, v_r = pts[t0 - h], pts[t0], pts[t0 + h]
    return Slopes((v_0 - v_l) / h, (v_r - v_0) / h)


@dataclass(frozen=True)
class HolderEstimate:
    alpha: float | None
    residual: float
    flat: bool
    points: int

    def describe(self):
        if self.flat:
            return ">= 1 (flat to tolerance)"
        return f"{self.alpha:.4f} (residual {self.residual:.2e})"


def holder_exponent_estimate(samples, t0) -> HolderEstimate:
    """Least-squares slope of log|BL(t0 + h) - BL(t0)| against log|h|."""
    base = _lookup(samples, t0)
    if base is None or not base.finite:
        raise ValueError("need a finite sample at t0")
    others = [s for s in samples if abs(s.t - t0) > SAME_T]
    if len(others) < 6:
        raise ValueError("need at least 6 samples besides t0")
    if any(not s.finite for s in others):
        raise ValueError("all samples must be finite")
    h = np.array([abs(s.t - t0) for s in others])
    diff = np.array([abs(s.value - base.value) for s in others])
    keep = diff > FLAT_TOL
    if keep.sum() < 2:
        return HolderEstimate(None, 0.0, True, len(others))
    x, y = np.log(h[keep]), np.log(diff[keep])
    coef = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((np.polyval(coef, x) - y) ** 2)))
    return HolderEstimate(float(coef[0]), resid, False, int(keep.sum()))


def geometric_samples(datum_a, datum_b, t0, h, count=6, side=1, method="barthe", config=None):
    """Samples at t0 and t0 + side * h / 2^k for k < count."""
    out = [evaluate_at(datum_a, datum_b, t0, method, config)]
    for k in range(count):
        out.append(evaluate_at(datum_a, datum_b, t0 + side * h / 2 ** k, method, config))
    return out


def max_adjacent_jump(samples):
    vals = [s.value for s in samples]
    if any(v is None for v in vals):
        return math.inf
    return float(np.max(np.abs(np.diff(vals)))) if len(vals) > 1 else 0.0


def liminf_gap(datum_a, datum_b, sample, hs=(1e-5, 1e-6), method="barthe", config=None):
    """Estimated liminf of nearby values minus the value at ``sample.t``.

    The minimum over t +- h is taken at the two steps in ``hs`` and extrapolated
    linearly to h = 0, so a slope or a kink at t contributes nothing while a
    genuine downward jump survives. A lower-semicontinuity witness needs this
    to be >= -tolerance.
    """
    h1, h2 = hs
    mins = []
    for h in (h1, h2):
        near = []
        for side in (-1.0, 1.0):
            s = evaluate_at(datum_a, datum_b, sample.t + side * h, method, config)
            near.append(math.inf if s.infinite else s.value)
        if any(v is None for v in near):
            raise ValueError("solver failure near the sample")
        mins.append(min(near))
    m1, m2 = mins
    if math.isinf(m1) or math.isinf(m2):
        return m2 - sample.value
    return m2 + (m2 - m1) * h2 / (h1 - h2) - sample.value


CSV_COLUMNS = ("t", "value", "infinite", "method", "converged", "iterations", "seconds")


def write_samples_csv(samples, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for s in samples:
        w.writerow([repr(s.t), "" if s.value is None else repr(s.value), int(s.infinite), s.method,
                    int(s.converged), s.iterations, f"{s.seconds:.6f}"])
