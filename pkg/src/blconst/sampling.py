"""Seeded random data with finite constants, for tests and probes."""
from __future__ import annotations

import numpy as np

from .datum import make_datum
from .finiteness import decide_finiteness


def random_signature(rng, n, max_m=4, max_nj=2, margin=0.05):
    """(n, dims, p) with sum_j p_j n_j = n and every p_j <= 1 - margin."""
    while True:
        m = int(rng.integers(1, max_m + 1))
        dims = [int(rng.integers(1, min(max_nj, n) + 1)) for _ in range(m)]
        if sum(dims) < n:
            continue
        w = rng.uniform(0.2, 1.0, size=m)
        p = w * n / float(np.dot(w, dims))
        if np.any(p > 1.0 - margin):
            continue
        return n, dims, [float(x) for x in p]


def has_margin(datum, margin, budget=64, seed=0):
    """No candidate proper subspace comes within ``margin`` of violating the criterion."""
    verdict = decide_finiteness(datum, budget=budget, seed=seed)
    if verdict.infinite:
        return False
    return verdict.diagnostics.get("max_defect", -np.inf) <= -margin


def random_datum(rng, signature=None, max_n=3, margin=0.05, max_tries=1000, **kw):
    """Gaussian random maps, redrawn until the constant is finite with some room.

    n is drawn once up front so that rejections do not bias towards n = 1. A
    fixed ``signature`` keeps (n, dims, p) and only redraws the matrices; some
    signatures are critical for every choice of maps, hence ``max_tries``.
    """
    n = signature[0] if signature is not None else int(rng.integers(1, max_n + 1))
    for _ in range(max_tries):
        sig = signature if signature is not None else random_signature(rng, n, margin=margin, **kw)
        _, dims, p = sig
        datum = make_datum(n, [(pj, rng.standard_normal((d, n))) for pj, d in zip(p, dims)])
        if has_margin(datum, margin):
            return datum
    raise RuntimeError(f"no datum with margin {margin} found in {max_tries} draws")
