"""Generalized Barthe formulation.

Flatten the maps into K = sum_i n_i directions v_k = L_i^T R_i^T e_j with
exponents q_k = p_i. Then

    BL(L, p)^2 = sup_{R, lambda > 0}  prod_k lambda_k^{q_k} / sum_I lambda_I q_I d_I,

where I runs over the n-subsets of {1..K} and d_I = det(v_k : k in I)^2.
For fixed rotations the problem is concave in u = log(lambda):

    u -> <q, u> - log sum_I exp(<1_I, u> + log(q_I d_I)).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp

from .datum import BLDatum, make_datum, scaling_defect, validate_datum
from .exceptions import InvalidDatumError
from .finiteness import SCALING_TOL, SUPPORT_TOL, divergence_certificate, DivergenceDirection
from .linalg import (RotationParams, num_angles, rotation_derivatives, rotation_matrix, squared_minors,
                     subsets)
from .report import INFINITE, NOT_CONVERGED, OPTIMAL, OptimizeReport, SolverConfig, best_of

FD_STEP = 1e-5
INNER_TOL = 1e-9
INNER_MAX_ITER = 500
MAX_STEP = 20.0
# outer stationarity is judged on the envelope gradient, whose accuracy is
# limited by the inner tolerance times the curvature in the angles
OUTER_GTOL = 1e-5


@dataclass(frozen=True)
class FlattenedExponents:
    K: int
    q: np.ndarray
    index: tuple  # index[k] = (i, j): map i, basis direction j (0-based)


@dataclass(frozen=True)
class SubsetWeights:
    K: int
    n: int
    subsets: np.ndarray  # (N, n) 0-based index sets, lexicographic
    d: np.ndarray
    q_I: np.ndarray

    def rows(self):
        for I, d, qi in zip(self.subsets, self.d, self.q_I):
            yield tuple(int(k) + 1 for k in I), float(d), float(qi)


@dataclass(frozen=True)
class BartheParams:
    lam: np.ndarray
    rotations: RotationParams


@dataclass
class LambdaResult:
    value: float  # supremum of the ratio (a squared constant), inf when unbounded
    lam: np.ndarray | None
    status: str  # "optimal", "not-converged" or "unbounded"
    direction: DivergenceDirection | None = None
    grad_norm: float = 0.0
    iterations: int = 0
    u: np.ndarray | None = None

    @property
    def converged(self):
        return self.status == "optimal"


def flatten_exponents(datum: BLDatum) -> FlattenedExponents:
    q, index = [], []
    for i, e in enumerate(datum.maps):
        for j in range(e.n_j):
            q.append(e.p)
            index.append((i, j))
    return FlattenedExponents(len(q), np.array(q, dtype=float), tuple(index))


def direction_matrix(datum: BLDatum, R: RotationParams | None = None):
    """n x K matrix whose k-th column is v_k = L_i^T R_i^T e_j."""
    if R is None:
        R = RotationParams.identity(datum.dims)
    blocks = []
    for L, a, d in zip(datum.matrices(), R.angles, datum.dims):
        blocks.append(rotation_matrix(a, d) @ L)
    return np.vstack(blocks).T


def _weights_from_directions(V, q):
    n, K = V.shape
    if K < n:
        raise ValueError(f"K={K} < n={n}: no n-subsets, the scaling condition cannot hold")
    S = subsets(K, n)
    return SubsetWeights(K, n, np.array(S), squared_minors(V), np.prod(q[S], axis=1))


def compute_dI(datum: BLDatum, R: RotationParams | None = None) -> SubsetWeights:
    q = flatten_exponents(datum).q
    return _weights_from_directions(direction_matrix(datum, R), q)


def _q_vector(q):
    return np.asarray(getattr(q, "q", q), dtype=float)


def log_barthe_objective(weights: SubsetWeights, q, lam) -> float:
    q = _q_vector(q)
    u = np.log(np.asarray(lam, dtype=float))
    c = weights.q_I * weights.d
    mask = c > 0
    if not np.any(mask):
        return math.inf
    S = weights.subsets[mask]
    log_den = logsumexp(u[S].sum(axis=1) + np.log(c[mask]))
    if log_den <= math.log(1e-300):
        return math.inf
    return float(q @ u - log_den)


def barthe_objective(weights: SubsetWeights, q, lam) -> float:
    """prod lambda_k^{q_k} / sum_I lambda_I q_I d_I (inf when the denominator vanishes)."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("lambda must be positive")
    return math.exp(min(log_barthe_objective(weights, q, lam), 709.0)) if math.isfinite(
        log_barthe_objective(weights, q, lam)) else math.inf


class _Concave:
    """log-objective in u = log(lambda), restricted to supported subsets."""

    def __init__(self, weights, q):
        c = weights.q_I * weights.d
        keep = c > SUPPORT_TOL
        self.q = q
        self.S = weights.subsets[keep]
        self.logc = np.log(c[keep])
        self.P = np.zeros((self.S.shape[0], q.size))
        self.P[np.arange(self.S.shape[0])[:, None], self.S] = 1.0

    def value(self, u):
        return float(self.q @ u - logsumexp(self.P @ u + self.logc))

    def derivatives(self, u):
        z = self.P @ u + self.logc
        lse = logsumexp(z)
        pi = np.exp(z - lse)
        mean = self.P.T @ pi
        grad = self.q - mean
        cov = (self.P.T * pi) @ self.P - np.outer(mean, mean)
        return float(self.q @ u - lse), grad, cov


def optimize_lambda(weights: SubsetWeights, q, tol=INNER_TOL, max_iter=INNER_MAX_ITER, u0=None) -> LambdaResult:
    """Global supremum over lambda for fixed weights.

    First decides boundedness with the divergence LP, then runs regularized
    Newton ascent with Armijo backtracking on the concave log-objective.
    """
    q = _q_vector(q)
    direction = divergence_certificate(weights, q)
    if direction is not None:
        return LambdaResult(math.inf, None, "unbounded", direction)
    f = _Concave(weights, q)
    K = q.size
    gauge = abs(q.sum() - weights.n) <= SCALING_TOL
    u = np.zeros(K) if u0 is None else np.array(u0, dtype=float)
    if gauge:
        u -= (q @ u) / q.sum()
    val, grad, cov = f.derivatives(u)
    it = 0
    while it < max_iter:
        gnorm = float(np.max(np.abs(grad)))
        if gnorm <= tol:
            break
        it += 1
        # Levenberg-style damping proportional to the gradient keeps steps
        # bounded where the supremum is approached only at infinity
        mu = max(gnorm, 1e-12)
        step = np.linalg.solve(cov + mu * np.eye(K), grad)
        big = np.max(np.abs(step))
        if big > MAX_STEP:
            step *= MAX_STEP / big
        slope = float(grad @ step)
        if slope < 1e-13 * max(1.0, abs(val)):
            # predicted ascent is below round-off in the value: judge by the gradient
            cand = u + step
            if gauge:
                cand -= (q @ cand) / q.sum()
            cval, cgrad, ccov = f.derivatives(cand)
            if np.max(np.abs(cgrad)) >= gnorm:
                break
            u, val, grad, cov = cand, cval, cgrad, ccov
            continue
        t = 1.0
        while True:
            cand = u + t * step
            if gauge:
                cand -= (q @ cand) / q.sum()
            cval = f.value(cand)
            if cval >= val + 1e-4 * t * slope or t < 1e-12:
                break
            t *= 0.5
        if cval < val:
            break  # no ascent possible at machine precision
        u = cand
        val, grad, cov = f.derivatives(u)
    gnorm = float(np.max(np.abs(grad)))
    status = "optimal" if gnorm <= tol else "not-converged"
    return LambdaResult(math.exp(val), np.exp(u), status, None, gnorm, it, u)


def rotation_gradient(datum: BLDatum, theta, u):
    """Gradient in the flat rotation angles of the log-ratio at fixed u = log(lambda).

    At an inner optimum u* this is the derivative of the inner supremum
    (envelope theorem). d(d_I) uses Jacobi's formula column by column, which
    stays well defined when V_I is singular.
    """
    theta = np.asarray(theta, dtype=float)
    dims = datum.dims
    R = RotationParams.from_flat(theta, dims)
    V = direction_matrix(datum, R)
    n, K = V.shape
    q = flatten_exponents(datum).q
    S = subsets(K, n)
    blocks = V[:, S].transpose(1, 0, 2)
    dets = np.linalg.det(blocks)
    q_I = np.prod(q[S], axis=1)
    keep = q_I > 0
    z = np.full(S.shape[0], -np.inf)
    z[keep] = u[S[keep]].sum(axis=1) + np.log(q_I[keep])
    log_den = logsumexp(z[keep] + np.log(np.maximum(dets[keep] ** 2, 1e-300)))
    weight = np.exp(z - log_den)  # q_I lambda_I / denominator
    grad = np.zeros(theta.size)
    pos, col = 0, 0
    for L, a, d in zip(datum.matrices(), R.angles, dims):
        for dR in rotation_derivatives(a, d):
            dV = np.zeros_like(V)
            dV[:, col:col + d] = (dR @ L).T
            ddet = np.zeros(S.shape[0])
            for c in range(n):
                B = blocks.copy()
                B[:, :, c] = dV[:, S[:, c]].T
                ddet += np.linalg.det(B)
            grad[pos] = -np.sum(weight * 2.0 * dets * ddet)
            pos += 1
        col += d
    return grad


# -- outer rotation search -------------------------------------------------------

def _infinite_report(certificate, starts, method="barthe"):
    return OptimizeReport(math.inf, None, 0, True, 0.0, starts, method, INFINITE, certificate)


def optimize_barthe(datum: BLDatum, config: SolverConfig | None = None, gradient="envelope") -> OptimizeReport:
    """sqrt of the supremum over rotations of the inner lambda optimum.

    Rank-1 data have no rotation freedom and reduce to a single concave solve.
    ``gradient`` selects the outer derivative: "envelope" (exact at the inner
    optimum) or "fd" (forward differences with step FD_STEP).
    """
    config = config or SolverConfig()
    if gradient not in ("envelope", "fd"):
        raise ValueError("gradient must be 'envelope' or 'fd'")
    report = validate_datum(datum)
    if not report.ok:
        raise InvalidDatumError(report)
    flat = flatten_exponents(datum)
    q = flat.q
    if flat.K < datum.n:
        return _infinite_report(("scaling", scaling_defect(datum)), config.starts)
    dims = datum.dims
    n_angles = sum(num_angles(d) for d in dims)

    def inner(theta, u0=None):
        R = RotationParams.from_flat(theta, dims)
        return optimize_lambda(compute_dI(datum, R), q, u0=u0), R

    if n_angles == 0:
        res, R = inner(np.zeros(0))
        if res.status == "unbounded":
            return _infinite_report(res.direction, 1)
        value = math.sqrt(res.value)
        return OptimizeReport(value, BartheParams(res.lam, R), res.iterations, res.converged,
                              res.grad_norm, 1, "barthe", OPTIMAL if res.converged else NOT_CONVERGED)

    reports = []
    for start in range(config.starts):
        rng = config.rng(start)
        theta0 = np.zeros(n_angles) if start == 0 else rng.uniform(0.0, 2.0 * np.pi, size=n_angles)
        state = {"u": None, "unbounded": None, "evals": 0}

        def solve_at(theta):
            # warm start from the previous inner optimum along this start's trajectory
            res, _ = inner(theta, state["u"])
            state["evals"] += 1
            if res.status == "unbounded":
                state["unbounded"] = res.direction
                raise StopIteration
            state["u"] = res.u
            return res

        def fun(theta):
            try:
                res = solve_at(theta)
                f0 = -math.log(res.value)
                if gradient == "envelope":
                    return f0, -rotation_gradient(datum, theta, res.u)
                g = np.empty(n_angles)
                for k in range(n_angles):
                    th = theta.copy()
                    th[k] += FD_STEP
                    g[k] = (-math.log(solve_at(th).value) - f0) / FD_STEP
                state["u"] = res.u
                return f0, g
            except StopIteration:
                return 0.0, np.zeros(n_angles)

        def stop(intermediate_result):
            if state["unbounded"] is not None:
                raise StopIteration

        res = minimize(fun, theta0, jac=True, method="L-BFGS-B", callback=stop,
                       options={"maxiter": config.max_iter, "gtol": config.tol, "ftol": 1e-15, "maxls": 50})
        if state["unbounded"] is not None:
            return _infinite_report(state["unbounded"], start + 1)
        final, R = inner(res.x)
        if final.status == "unbounded":
            return _infinite_report(final.direction, start + 1)
        gnorm = float(np.max(np.abs(rotation_gradient(datum, res.x, final.u))))
        ok = bool(final.converged and gnorm <= max(config.tol, OUTER_GTOL))
        reports.append(OptimizeReport(math.sqrt(final.value), BartheParams(final.lam, R), int(res.nit), ok,
                                      gnorm, 1, "barthe", OPTIMAL if ok else NOT_CONVERGED,
                                      start_index=start, extra={"inner_evals": state["evals"]}))
    best = best_of(reports)
    best.starts = config.starts
    best.iterations = sum(r.iterations for r in reports)
    return best


def rank1_constant(vectors, p, config: SolverConfig | None = None) -> float:
    """Barthe's rank-1 constant for vectors v_j in R^n (inf when unbounded)."""
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    datum = make_datum(V.shape[1], [(pj, v[None, :]) for pj, v in zip(p, V)])
    return optimize_barthe(datum, config).value


def weights_csv(weights: SubsetWeights) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["subset", "d_I", "q_I"])
    for I, d, qi in weights.rows():
        w.writerow(["-".join(str(k) for k in I), repr(d), repr(qi)])
    return buf.getvalue()
