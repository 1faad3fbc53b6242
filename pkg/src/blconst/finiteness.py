"""Finiteness of the Brascamp-Lieb constant.

BL(L, p) is finite iff sum_j p_j n_j = n and dim V <= sum_j p_j dim(L_j V)
for every subspace V. The scaling part is exact. The subspace part is searched
over a candidate family: exhaustive for rank-1 data, a falsifier otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import linprog

from .datum import BLDatum, scaling_defect, validate_datum
from .exceptions import InvalidDatumError
from .linalg import RANK_RTOL, numerical_rank, orthonormal_rows

SCALING_TOL = 1e-9
DEFECT_TOL = 1e-9
SUPPORT_TOL = 1e-14
GAP_TOL = 1e-9
# 2^m subsets of the rank-1 vectors are enumerated up to this m
MAX_RANK1_MAPS = 16

FINITE, INFINITE, UNKNOWN = "Finite", "Infinite", "Unknown"


@dataclass(frozen=True)
class FinitenessVerdict:
    status: str
    certificate: object = None  # "scaling", a (k, n) basis array, or None
    defect: float | None = None
    basis: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def infinite(self):
        return self.status == INFINITE

    def describe(self):
        if self.status != INFINITE:
            return self.status
        if isinstance(self.certificate, str):
            return f"scaling: sum p_j n_j - n = {self.defect:+.6g}"
        rows = ", ".join("(" + ", ".join(f"{x:.6g}" for x in r) + ")" for r in self.certificate)
        return f"subspace V = span{{{rows}}}, defect {self.defect:+.6g}"


@dataclass(frozen=True)
class DivergenceDirection:
    """Log-scaling ray exp(s u) along which the Barthe ratio grows like exp(s gap)."""

    u: np.ndarray | None
    gap: float
    identically_infinite: bool = False


def subspace_dimension_image(L, basis):
    """dim(L V) for V spanned by the rows of ``basis`` (assumed orthonormal)."""
    L = np.atleast_2d(L)
    scale = np.linalg.norm(L, 2) * np.linalg.norm(basis, 2)
    return numerical_rank(L @ basis.T, scale=scale)


def subspace_defect(datum: BLDatum, V) -> float:
    """dim V - sum_j p_j dim(L_j V); positive values witness BL = infinity."""
    V = np.atleast_2d(np.asarray(V, dtype=float))
    if V.size == 0 or V.shape[1] != datum.n:
        raise ValueError("subspace basis must be a non-empty list of n-vectors")
    B = orthonormal_rows(V)
    if B.shape[0] == 0:
        raise ValueError("the zero subspace is excluded")
    dim = B.shape[0]
    if dim == datum.n:
        # surjective maps: dim L_j R^n = n_j, same thresholds as validation
        return float(datum.n - sum(e.p * e.n_j for e in datum.maps))
    total = 0.0
    for e, L in zip(datum.maps, datum.matrices()):
        total += e.p * subspace_dimension_image(L, B)
    return float(dim - total)


def _same_subspace(A, B):
    if A.shape[0] != B.shape[0]:
        return False
    return numerical_rank(np.vstack([A, B]), scale=1.0) == A.shape[0]


def _add_unique(pool, B, n):
    if B.shape[0] == 0 or B.shape[0] > n:
        return False
    for C in pool:
        if _same_subspace(C, B):
            return False
    pool.append(B)
    return True


def _complement(B, n):
    if B.shape[0] == 0:
        return np.eye(n)
    return null_space(B, rcond=RANK_RTOL).T


def _intersection(A, B, n):
    # x in A and B  <=>  x orthogonal to both complements
    C = np.vstack([_complement(A, n), _complement(B, n)])
    if C.shape[0] == 0:
        return np.eye(n)
    return null_space(C, rcond=RANK_RTOL).T


def _exhaustive_case(datum):
    """Every map is rank-1 or bijective, with few enough rank-1 maps to enumerate.

    A bijective map contributes p_j dim V to every V, so only the rank-1
    vectors shape the extremal subspaces.
    """
    ones = sum(1 for d in datum.dims if d == 1)
    return all(d in (1, datum.n) for d in datum.dims) and ones <= MAX_RANK1_MAPS


def _rank1_candidates(datum):
    n = datum.n
    vecs = [L[0] / np.linalg.norm(L[0]) for L in datum.matrices() if L.shape[0] == 1]
    pool = []
    for r in range(1, len(vecs) + 1):
        for S in combinations(range(len(vecs)), r):
            span = orthonormal_rows(np.array([vecs[k] for k in S]))
            _add_unique(pool, span, n)
            # complements of spans are the extremal ones: they kill exactly the v_j they contain
            comp = _complement(span, n)
            if comp.shape[0] > 0:
                _add_unique(pool, comp, n)
    if n > 1 and not pool:
        # bijective maps only: every proper subspace has the same defect sign, one line represents them
        _add_unique(pool, np.eye(n)[:1], n)
    _add_unique(pool, np.eye(n), n)
    return pool


def _kernel_lattice(datum, budget):
    """Kernel intersections over every subset of maps, then a breadth-first
    closure under pairwise sums and intersections until ``budget`` is hit."""
    n = datum.n
    mats = datum.matrices()
    kernels = [null_space(L, rcond=RANK_RTOL).T for L in mats]
    pool = []
    # largest subspace annihilated by a given set of maps
    for r in range(1, min(datum.m, MAX_RANK1_MAPS) + 1):
        for J in combinations(range(datum.m), r):
            V = kernels[J[0]]
            for j in J[1:]:
                if V.shape[0] == 0:
                    break
                V = _intersection(V, kernels[j], n)
            if V.shape[0]:
                _add_unique(pool, V, n)
    for L in mats:
        _add_unique(pool, orthonormal_rows(L), n)
    if len(pool) > budget:
        return pool, True
    frontier = list(pool)
    while frontier:
        fresh = []
        for A in frontier:
            for B in list(pool):
                for C in (_intersection(A, B, n), orthonormal_rows(np.vstack([A, B]))):
                    if C.shape[0] == 0 or C.shape[0] == n or any(_same_subspace(C, D) for D in pool):
                        continue
                    if len(pool) >= budget:
                        return pool, True
                    pool.append(C)
                    fresh.append(C)
        frontier = fresh
    return pool, False


def _candidates(datum, budget, seed):
    n = datum.n
    if _exhaustive_case(datum):
        return _rank1_candidates(datum), {"exhaustive": True, "truncated": False}
    pool, truncated = _kernel_lattice(datum, budget)
    _add_unique(pool, np.eye(n), n)
    rng = np.random.default_rng(seed)
    for _ in range(budget):
        k = int(rng.integers(1, n + 1))
        pool.append(orthonormal_rows(rng.standard_normal((k, n))))
    return pool, {"exhaustive": False, "truncated": truncated}


def candidate_subspaces(datum: BLDatum, budget: int = 64, seed: int = 0):
    """Candidate subspaces (orthonormal row bases) for the subspace criterion.

    Rank-1 data (bijective maps may be mixed in): spans of all subsets of the
    rank-1 vectors and their orthogonal complements, deduplicated; this family
    is exhaustive. General rank: the lattice generated by kernels and row
    spaces under pairwise sums and intersections (capped at ``budget``), plus
    ``budget`` seeded random subspaces.
    """
    return _candidates(datum, budget, seed)[0]


def decide_finiteness(datum: BLDatum, budget: int = 64, seed: int = 0) -> FinitenessVerdict:
    report = validate_datum(datum)
    if not report.ok:
        raise InvalidDatumError(report)
    sd = scaling_defect(datum)
    if abs(sd) > SCALING_TOL:
        basis = np.eye(datum.n) if sd < 0 else None
        return FinitenessVerdict(INFINITE, "scaling", sd, basis, {"tested": 0})
    pool, info = _candidates(datum, budget, seed)
    worst = -np.inf
    for B in pool:
        d = subspace_defect(datum, B)
        if B.shape[0] < datum.n:
            worst = max(worst, d)
        if d > DEFECT_TOL:
            diag = dict(info, tested=len(pool))
            return FinitenessVerdict(INFINITE, B, d, B, diag)
    # largest defect over proper subspaces; R^n itself always scores exactly 0 here
    diag = dict(info, tested=len(pool), max_defect=float(worst))
    if info["exhaustive"]:
        return FinitenessVerdict(FINITE, None, float(worst), None, diag)
    return FinitenessVerdict(UNKNOWN, None, float(worst), None, diag)


def divergence_certificate(weights, q):
    """Ray in log-lambda space along which the Barthe ratio is unbounded, if any.

    Solves: max <q,u> - t  s.t.  sum_{k in I} u_k <= t for supported I,
    |u_k| <= 1. A positive optimum means q lies outside the convex hull of
    the supported subset indicators.
    """
    q = np.asarray(getattr(q, "q", q), dtype=float)
    K = q.size
    c = np.asarray(weights.q_I) * np.asarray(weights.d)
    supported = np.asarray(weights.subsets)[c > SUPPORT_TOL]
    if supported.shape[0] == 0:
        return DivergenceDirection(None, np.inf, identically_infinite=True)
    A = np.zeros((supported.shape[0], K + 1))
    A[np.arange(supported.shape[0])[:, None], supported] = 1.0
    A[:, K] = -1.0
    cost = np.concatenate([-q, [1.0]])
    bounds = [(-1.0, 1.0)] * K + [(None, None)]
    res = linprog(cost, A_ub=A, b_ub=np.zeros(supported.shape[0]), bounds=bounds, method="highs-ds")
    if res.status != 0:
        raise RuntimeError(f"divergence LP failed: {res.message}")
    if -res.fun <= GAP_TOL:
        return None
    u = res.x[:K]
    u = u / np.max(np.abs(u))
    gap = float(q @ u - np.max(u[supported].sum(axis=1)))
    if gap < GAP_TOL:
        return None
    return DivergenceDirection(u, gap)
