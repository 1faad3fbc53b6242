"""Small dense linear-algebra kernels.

Everything here works on tiny matrices (dimension <= ~8), so clarity wins
over speed. Subsets are always enumerated in lexicographic order of their
sorted index tuples; downstream CSV output and tests rely on that order.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np
from scipy.linalg import expm, expm_frechet

RANK_RTOL = 1e-10
MAX_SUBSET_K = 20


def numerical_rank(M, scale=None, rtol=RANK_RTOL):
    """Rank of ``M`` counting singular values above ``rtol * scale``.

    ``scale`` defaults to the largest singular value of ``M`` itself. Callers
    forming products such as ``L @ B`` should pass the product of the factor
    norms instead, otherwise round-off residue in an exact zero product would
    be counted as rank.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if scale is None:
        scale = s[0] if s.size else 0.0
    if scale <= 0.0:
        return 0
    return int(np.sum(s > rtol * scale))


def orthonormal_rows(B, scale=None, rtol=RANK_RTOL):
    """Orthonormal basis (as rows) for the row space of ``B``."""
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if B.size == 0:
        return np.zeros((0, B.shape[1]))
    _, s, vt = np.linalg.svd(B, full_matrices=False)
    if scale is None:
        scale = s[0] if s.size else 0.0
    r = int(np.sum(s > rtol * scale)) if scale > 0 else 0
    return vt[:r]


# -- rotations ------------------------------------------------------------

def num_angles(dim):
    return dim * (dim - 1) // 2


def skew_from_angles(angles, dim):
    """Skew-symmetric generator whose (j, i) entry (i < j) is the angle.

    Pairs (i, j) are taken in lexicographic order. The sign convention makes
    a single angle in dimension 2 a counter-clockwise rotation.
    """
    angles = np.asarray(angles, dtype=float).ravel()
    if angles.size != num_angles(dim):
        raise ValueError(f"expected {num_angles(dim)} angles for dimension {dim}, got {angles.size}")
    S = np.zeros((dim, dim))
    iu = np.triu_indices(dim, 1)
    S[iu] = -angles
    S[(iu[1], iu[0])] = angles
    return S


def rotation_matrix(angles, dim):
    """exp of the skew generator; closed forms for dim <= 3, Pade otherwise."""
    if dim == 1:
        return np.ones((1, 1))
    S = skew_from_angles(angles, dim)
    if dim == 2:
        c, s = np.cos(S[1, 0]), np.sin(S[1, 0])
        return np.array([[c, -s], [s, c]])
    if dim == 3:
        # Rodrigues: exp(S) = I + sin(t)/t S + (1 - cos t)/t^2 S^2
        w = np.array([S[2, 1], S[0, 2], S[1, 0]])
        t = np.linalg.norm(w)
        if t < 1e-8:
            a, b = 1.0 - t * t / 6.0, 0.5 - t * t / 24.0
        else:
            a, b = np.sin(t) / t, (1.0 - np.cos(t)) / (t * t)
        return np.eye(3) + a * S + b * (S @ S)
    return expm(S)


def rotation_derivatives(angles, dim):
    """Derivatives of ``rotation_matrix`` with respect to each angle."""
    if dim == 1:
        return []
    S = skew_from_angles(angles, dim)
    out = []
    for idx in range(num_angles(dim)):
        e = np.zeros(num_angles(dim))
        e[idx] = 1.0
        out.append(expm_frechet(S, skew_from_angles(e, dim), compute_expm=False))
    return out


@dataclass(frozen=True)
class RotationParams:
    """Per-map rotation angles; ``angles[i]`` has n_i (n_i - 1) / 2 entries."""

    angles: tuple

    @classmethod
    def identity(cls, dims):
        return cls(tuple(np.zeros(num_angles(d)) for d in dims))

    @classmethod
    def from_flat(cls, flat, dims):
        flat = np.asarray(flat, dtype=float)
        parts, pos = [], 0
        for d in dims:
            k = num_angles(d)
            parts.append(flat[pos:pos + k].copy())
            pos += k
        if pos != flat.size:
            raise ValueError("flat angle vector has wrong length")
        return cls(tuple(parts))

    def flat(self):
        if not self.angles:
            return np.zeros(0)
        return np.concatenate([np.asarray(a, dtype=float).ravel() for a in self.angles])


def rotation_from_parameters(params: RotationParams, i: int):
    a = np.asarray(params.angles[i], dtype=float).ravel()
    # invert k = d(d-1)/2
    dim = int(round((1 + np.sqrt(1 + 8 * a.size)) / 2))
    return rotation_matrix(a, dim)


# -- positive definite assembly --------------------------------------------

@dataclass(frozen=True)
class SpectralPD:
    """Eigenvalues and rotation angles for each map."""

    eigenvalues: tuple
    rotations: RotationParams


def assemble_from_parts(eigenvalues, R):
    """R^T diag(eigenvalues) R."""
    lam = np.asarray(eigenvalues, dtype=float).ravel()
    if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
        raise ValueError("eigenvalues must be finite and strictly positive")
    A = R.T @ (lam[:, None] * R)
    return 0.5 * (A + A.T)


def assemble_pd(spec: SpectralPD, i: int):
    return assemble_from_parts(spec.eigenvalues[i], rotation_from_parameters(spec.rotations, i))


# -- determinants and Cauchy-Binet ---------------------------------------------

def det(M):
    """Determinant via LAPACK LU with partial pivoting."""
    return float(np.linalg.det(np.asarray(M, dtype=float)))


@lru_cache(maxsize=128)
def subsets(K, n):
    """All n-subsets of range(K), lexicographic, as an (N, n) int array."""
    if K > MAX_SUBSET_K:
        raise ValueError(f"subset enumeration capped at K <= {MAX_SUBSET_K} (got K={K}, C(K,n)={comb(K, n)})")
    if n > K:
        return np.zeros((0, n), dtype=int)
    arr = np.array(list(combinations(range(K), n)), dtype=int).reshape(-1, n)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=128)
def incidence(K, n):
    """0/1 matrix with one row per subset, marking its members."""
    S = subsets(K, n)
    P = np.zeros((S.shape[0], K))
    P[np.arange(S.shape[0])[:, None], S] = 1.0
    P.setflags(write=False)
    return P


def squared_minors(V):
    """det(V[:, I])^2 for every n-subset I of the K columns of the n x K matrix V."""
    V = np.asarray(V, dtype=float)
    n, K = V.shape
    S = subsets(K, n)
    if S.shape[0] == 0:
        return np.zeros(0)
    blocks = V[:, S].transpose(1, 0, 2)  # (N, n, n), columns picked by I
    return np.linalg.det(blocks) ** 2


@dataclass(frozen=True)
class CauchyBinetResult:
    total: float
    subsets: np.ndarray
    minors_sq: np.ndarray

    def terms(self):
        """Mapping from 1-based subset tuples to squared minors."""
        return {tuple(int(k) + 1 for k in I): float(d) for I, d in zip(self.subsets, self.minors_sq)}


def cauchy_binet_det(columns, weights):
    """det(sum_k w_k v_k v_k^T) expanded as sum_I w_I det(V_I)^2.

    ``columns`` is an n x K array (or a sequence of K vectors of length n).
    """
    V = np.asarray(columns, dtype=float)
    if V.ndim != 2:
        raise ValueError("columns must be two-dimensional")
    w = np.asarray(weights, dtype=float).ravel()
    if V.shape[1] != w.size and V.shape[0] == w.size:
        V = V.T
    n, K = V.shape
    if w.size != K:
        raise ValueError("need one weight per column")
    if K < n:
        raise ValueError(f"K={K} columns cannot span dimension n={n}; the subset family is empty")
    S = subsets(K, n)
    d = squared_minors(V)
    total = float(np.sum(np.prod(w[S], axis=1) * d))
    return CauchyBinetResult(total, np.array(S), d)
