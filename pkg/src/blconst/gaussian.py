"""Gaussian-input formulation.

For positive definite A_j the ratio

    prod_j det(A_j)^{p_j/2} / det(sum_j p_j L_j^T A_j L_j)^{1/2}

is a lower bound for BL(L, p), and its supremum equals BL(L, p). The
supremum is searched over the spectral chart A_j = R_j^T diag(exp(s_j)) R_j.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.linalg import logm
from scipy.optimize import minimize

from .datum import BLDatum
from .exceptions import DegenerateError, InfiniteConstantError, StepFailure
from .finiteness import decide_finiteness
from .linalg import num_angles, rotation_derivatives, rotation_matrix
from .report import NOT_CONVERGED, OPTIMAL, UNBOUNDED, OptimizeReport, SolverConfig, best_of

DEGENERATE_DET = 1e-300
DEGENERATE_RCOND = 1e-14
UNBOUNDED_VALUE = 1e9


def _check_input(datum, A):
    if len(A) != datum.m:
        raise ValueError(f"need {datum.m} matrices, got {len(A)}")
    out = []
    for j, (Aj, d) in enumerate(zip(A, datum.dims)):
        Aj = np.atleast_2d(np.asarray(Aj, dtype=float))
        if Aj.shape != (d, d):
            raise ValueError(f"A_{j} must be {d}x{d}")
        if np.max(np.abs(Aj - Aj.T)) > 1e-10 * max(1.0, np.max(np.abs(Aj))):
            raise ValueError(f"A_{j} is not symmetric")
        try:
            np.linalg.cholesky(Aj)
        except np.linalg.LinAlgError:
            raise ValueError(f"A_{j} is not positive definite") from None
        out.append(Aj)
    return out


def assemble_M(datum, A):
    n = datum.n
    M = np.zeros((n, n))
    for e, L, Aj in zip(datum.maps, datum.matrices(), A):
        M += e.p * (L.T @ Aj @ L)
    return 0.5 * (M + M.T)


def _sqrt_psd(Aj):
    w, Q = np.linalg.eigh(Aj)
    return (np.sqrt(np.clip(w, 0.0, None))[:, None] * Q.T)


def _factor_spectrum(datum, roots):
    """Singular values / right vectors of F, the stack of sqrt(p_j) A_j^{1/2} L_j.

    M = F^T F, and going through F keeps small eigenvalues of M accurate to
    relative precision eps * cond(F) = eps * sqrt(cond(M)).
    """
    F = np.vstack([math.sqrt(e.p) * (Rt @ L) for e, L, Rt in zip(datum.maps, datum.matrices(), roots)])
    if F.shape[0] < datum.n:
        return np.zeros(datum.n), np.eye(datum.n)
    _, sv, vt = np.linalg.svd(F, full_matrices=False)
    return sv, vt


def _degenerate_sv(sv):
    w = sv * sv
    top = w[0] if w.size else 0.0
    logdet = np.sum(np.log(w)) if np.all(w > 0) else -np.inf
    return logdet <= math.log(DEGENERATE_DET) or w[-1] <= DEGENERATE_RCOND * top, w, logdet


def _degenerate(M):
    w = np.linalg.eigvalsh(M)
    top = max(w[-1], 0.0)
    return np.prod(w) <= DEGENERATE_DET or w[0] <= DEGENERATE_RCOND * top, w


def log_gaussian_ratio(datum: BLDatum, A) -> float:
    A = _check_input(datum, A)
    sv, _ = _factor_spectrum(datum, [_sqrt_psd(Aj) for Aj in A])
    bad, w, logdet = _degenerate_sv(sv)
    if bad:
        raise DegenerateError("degenerate M: sum_j p_j L_j^T A_j L_j is singular", spectrum=w)
    num = sum(e.p * np.linalg.slogdet(Aj)[1] for e, Aj in zip(datum.maps, A))
    return 0.5 * num - 0.5 * logdet


def gaussian_ratio(datum: BLDatum, A) -> float:
    """The ratio for gaussian inputs with covariance data A; always <= BL(L, p)."""
    return math.exp(log_gaussian_ratio(datum, A))


def fixed_point_step(datum: BLDatum, A):
    """A_j <- (L_j M^{-1} L_j^T)^{-1}, M = sum_i p_i L_i^T A_i L_i.

    The update maximizes a concave minorant of the log-ratio that touches it at
    the current point (log det is concave), so the ratio cannot decrease.
    """
    A = _check_input(datum, A)
    M = assemble_M(datum, A)
    if _degenerate(M)[0]:
        raise StepFailure("M is singular")
    Minv = np.linalg.inv(M)
    out = []
    for L in datum.matrices():
        B = L @ Minv @ L.T
        B = 0.5 * (B + B.T)
        w = np.linalg.eigvalsh(B)
        if w[0] <= DEGENERATE_RCOND * max(w[-1], 0.0) or w[0] <= 0:
            raise StepFailure("L_j M^{-1} L_j^T is singular")
        Aj = np.linalg.inv(B)
        out.append(0.5 * (Aj + Aj.T))
    return out


def fixed_point_solve(datum, A, max_iter=1000, tol=1e-12):
    """Iterate :func:`fixed_point_step` until the log-ratio stalls."""
    cur = _check_input(datum, A)
    val = log_gaussian_ratio(datum, cur)
    for it in range(max_iter):
        nxt = fixed_point_step(datum, cur)
        new = log_gaussian_ratio(datum, nxt)
        cur, done = nxt, new - val <= tol
        val = new
        if done:
            return cur, math.exp(val), it + 1
    return cur, math.exp(val), max_iter


# -- spectral chart --------------------------------------------------------------

def chart_size(datum):
    return sum(d + num_angles(d) for d in datum.dims)


def _split(datum, x):
    pos, parts = 0, []
    for d in datum.dims:
        s = x[pos:pos + d]
        th = x[pos + d:pos + d + num_angles(d)]
        parts.append((s, th))
        pos += d + num_angles(d)
    return parts


def chart_to_input(datum, x):
    A = []
    for (s, th), d in zip(_split(datum, np.asarray(x, dtype=float)), datum.dims):
        R = rotation_matrix(th, d)
        A.append(R.T @ (np.exp(s)[:, None] * R))
    return [0.5 * (a + a.T) for a in A]


def _rotation_angles(R):
    d = R.shape[0]
    if d == 1:
        return np.zeros(0)
    if d == 2:
        return np.array([math.atan2(R[1, 0], R[0, 0])])
    S = np.real(logm(R))
    S = 0.5 * (S - S.T)
    iu = np.triu_indices(d, 1)
    return S[(iu[1], iu[0])].copy()


def input_to_chart(datum, A):
    """Inverse of :func:`chart_to_input` (one representative)."""
    parts = []
    for Aj in A:
        w, Q = np.linalg.eigh(Aj)
        R = Q.T
        if np.linalg.det(R) < 0:
            R[0] = -R[0]
        parts.append(np.log(w))
        parts.append(_rotation_angles(R))
    return np.concatenate(parts)


def log_ratio_chart(datum: BLDatum, x):
    """Log-ratio and its analytic gradient in chart coordinates."""
    x = np.asarray(x, dtype=float)
    parts = _split(datum, x)
    Ls = datum.matrices()
    Rs = [rotation_matrix(th, d) for (_, th), d in zip(parts, datum.dims)]
    roots = [np.exp(0.5 * s)[:, None] * R for (s, _), R in zip(parts, Rs)]
    sv, vt = _factor_spectrum(datum, roots)
    bad, w, logdet = _degenerate_sv(sv)
    if bad:
        raise DegenerateError("degenerate M in chart evaluation", spectrum=w)
    num = sum(e.p * np.sum(s) for e, (s, _) in zip(datum.maps, parts))
    val = 0.5 * num - 0.5 * logdet
    Minv = vt.T @ (vt / w[:, None])
    grad = np.empty_like(x)
    pos = 0
    for e, L, R, (s, th), d in zip(datum.maps, Ls, Rs, parts, datum.dims):
        B = L @ Minv @ L.T
        lam = np.exp(s)
        RBRt = R @ B @ R.T
        grad[pos:pos + d] = 0.5 * e.p * (1.0 - lam * np.diag(RBRt))
        G = -0.5 * e.p * B
        for k, dR in enumerate(rotation_derivatives(th, d)):
            grad[pos + d + k] = 2.0 * np.trace(G @ R.T @ (lam[:, None] * dR))
        pos += d + num_angles(d)
    return val, grad


def normalize_chart(datum, x):
    """Shift log-eigenvalues so that prod_j det(A_j)^{p_j} = 1."""
    x = np.array(x, dtype=float)
    parts = _split(datum, x)
    weight = sum(e.p * e.n_j for e in datum.maps)
    if weight <= 0:
        return x
    c = -sum(e.p * np.sum(s) for e, (s, _) in zip(datum.maps, parts)) / weight
    pos = 0
    for d in datum.dims:
        x[pos:pos + d] += c
        pos += d + num_angles(d)
    return x


def _random_start(datum, rng, start):
    if start == 0:
        return np.zeros(chart_size(datum))
    parts = []
    for d in datum.dims:
        parts.append(rng.uniform(-2.0, 2.0, size=d))
        parts.append(rng.uniform(0.0, 2.0 * np.pi, size=num_angles(d)))
    return np.concatenate(parts)


# gradients in the log-eigenvalue chart bottom out near 1e-8 from round-off
# once the optimal inputs are strongly anisotropic
GTOL_FLOOR = 1e-6


def _run_start(datum, config, start):
    rng = config.rng(start)
    x0 = _random_start(datum, rng, start)
    limit = math.log(UNBOUNDED_VALUE)
    state = {"unbounded": False}

    def fun(x):
        if not np.all(np.abs(x) < 300.0):
            return np.inf, np.zeros_like(x)
        try:
            with np.errstate(all="ignore"):
                v, g = log_ratio_chart(datum, x)
        except (DegenerateError, np.linalg.LinAlgError, ValueError):
            return np.inf, np.zeros_like(x)
        if not (np.isfinite(v) and np.all(np.isfinite(g))):
            return np.inf, np.zeros_like(x)
        return -v, -g

    def callback(intermediate_result):
        if -intermediate_result.fun > limit:
            state["unbounded"] = True
            raise StopIteration

    res = minimize(fun, x0, jac=True, method="L-BFGS-B", callback=callback,
                   options={"maxiter": config.max_iter, "gtol": config.tol, "ftol": 1e-15,
                            "maxcor": 20, "maxls": 50})
    x = normalize_chart(datum, res.x)
    val, grad = log_ratio_chart(datum, x)
    gnorm = float(np.max(np.abs(grad))) if grad.size else 0.0
    iters = int(res.nit)
    A = chart_to_input(datum, x)
    if state["unbounded"]:
        status = UNBOUNDED
    elif gnorm <= max(config.tol, GTOL_FLOOR):
        status = OPTIMAL
    else:
        # first-order methods crawl when the supremum is only approached at infinity;
        # the monotone fixed-point map usually closes the remaining gap
        try:
            A2, _, k = fixed_point_solve(datum, A, max_iter=config.max_iter)
            x2 = normalize_chart(datum, input_to_chart(datum, A2))
            v2, g2 = log_ratio_chart(datum, x2)
            iters += k
            if v2 >= val:
                x, val, grad = x2, v2, g2
                gnorm = float(np.max(np.abs(grad))) if grad.size else 0.0
                A = chart_to_input(datum, x)
        except (StepFailure, DegenerateError, np.linalg.LinAlgError, ValueError):
            pass
        status = OPTIMAL if gnorm <= max(config.tol, GTOL_FLOOR) else NOT_CONVERGED
        if val > limit:
            status = UNBOUNDED
    value = gaussian_ratio(datum, A)
    return OptimizeReport(value, A, iters, status == OPTIMAL, gnorm, 1, "lieb", status,
                          start_index=start)


def optimize_lieb(datum: BLDatum, config: SolverConfig | None = None, verdict=None) -> OptimizeReport:
    """Multi-start ascent on the log gaussian ratio.

    Refuses data already certified infinite; pass a precomputed ``verdict``
    to skip the finiteness check.
    """
    config = config or SolverConfig()
    if verdict is None:
        verdict = decide_finiteness(datum, seed=config.seed)
    if verdict.infinite:
        raise InfiniteConstantError(verdict)
    reports = [_run_start(datum, config, i) for i in range(config.starts)]
    best = best_of(reports)
    best.starts = config.starts
    best.iterations = sum(r.iterations for r in reports)
    if any(r.status == UNBOUNDED for r in reports):
        best.status = UNBOUNDED
        best.converged = False
    return best
