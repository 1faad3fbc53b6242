import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blconst.linalg import (MAX_SUBSET_K, RotationParams, SpectralPD, assemble_pd, cauchy_binet_det,
                            rotation_derivatives, rotation_from_parameters, rotation_matrix, subsets)


def test_rotation_so1():
    R = rotation_from_parameters(RotationParams((np.zeros(0),)), 0)
    assert R.shape == (1, 1) and R[0, 0] == 1.0


def test_rotation_zero_angle_identity():
    R = rotation_from_parameters(RotationParams((np.array([0.0]),)), 0)
    assert np.array_equal(R, np.eye(2))


def test_rotation_quarter_turn():
    R = rotation_from_parameters(RotationParams((np.array([math.pi / 2]),)), 0)
    assert np.allclose(R, [[0, -1], [1, 0]], atol=1e-15)


def test_rotation_indexes_maps():
    params = RotationParams((np.zeros(0), np.array([0.3]), np.array([0.1, 0.2, 0.3])))
    assert rotation_from_parameters(params, 0).shape == (1, 1)
    assert rotation_from_parameters(params, 1).shape == (2, 2)
    assert rotation_from_parameters(params, 2).shape == (3, 3)


@pytest.mark.parametrize("dim", [2, 3, 4])
def test_closed_forms_match_expm(dim):
    from scipy.linalg import expm
    from blconst.linalg import skew_from_angles
    rng = np.random.default_rng(dim)
    a = rng.uniform(-4, 4, size=dim * (dim - 1) // 2)
    assert np.allclose(rotation_matrix(a, dim), expm(skew_from_angles(a, dim)), atol=1e-13)


def test_rotation_derivative_matches_difference():
    a = np.array([0.3, -1.1, 0.7])
    h = 1e-6
    for k, dR in enumerate(rotation_derivatives(a, 3)):
        e = np.zeros(3)
        e[k] = h
        fd = (rotation_matrix(a + e, 3) - rotation_matrix(a - e, 3)) / (2 * h)
        assert np.allclose(dR, fd, atol=1e-8)


def test_orthogonality_1000_draws():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(1000):
        d = int(rng.integers(1, 5))
        a = rng.uniform(-10, 10, size=d * (d - 1) // 2)
        R = rotation_matrix(a, d)
        worst = max(worst, np.max(np.abs(R.T @ R - np.eye(d))))
        assert np.linalg.det(R) == pytest.approx(1.0, abs=1e-12)
    assert worst <= 1e-12


def _spd(eigs, angles):
    return assemble_pd(SpectralPD((np.asarray(eigs, float),), RotationParams((np.asarray(angles, float),))), 0)


def test_assemble_unit_eigenvalues():
    assert np.allclose(_spd([1, 1], [0.77]), np.eye(2), atol=1e-15)


def test_assemble_identity_rotation():
    assert np.array_equal(_spd([4, 1], [0.0]), np.diag([4.0, 1.0]))


def test_assemble_eighth_turn():
    # R^T D R with R the counter-clockwise eighth turn puts -1.5 off the diagonal;
    # the clockwise turn gives +1.5
    assert np.allclose(_spd([4, 1], [math.pi / 4]), [[2.5, -1.5], [-1.5, 2.5]], atol=1e-14)
    assert np.allclose(_spd([4, 1], [-math.pi / 4]), [[2.5, 1.5], [1.5, 2.5]], atol=1e-14)


@pytest.mark.parametrize("bad", [[0.0, 1.0], [-1.0, 2.0], [np.inf, 1.0]])
def test_assemble_rejects_nonpositive(bad):
    with pytest.raises(ValueError):
        _spd(bad, [0.0])


@given(st.integers(0, 2 ** 32 - 1))
def test_assemble_spectrum_preserved(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 5))
    eigs = np.exp(rng.uniform(-3, 3, size=d))
    A = _spd(eigs, rng.uniform(-np.pi, np.pi, size=d * (d - 1) // 2))
    assert np.max(np.abs(A - A.T)) <= 1e-12 * np.max(eigs)
    got = np.linalg.eigvalsh(A)
    assert np.allclose(np.sort(got), np.sort(eigs), rtol=1e-9)
    assert got.min() >= (1 - 1e-9) * eigs.min()


def test_cauchy_binet_three_vectors():
    res = cauchy_binet_det([[1, 0], [0, 1], [1, 1]], [1, 1, 1])
    assert res.total == pytest.approx(3.0, abs=1e-14)
    assert res.terms() == {(1, 2): 1.0, (1, 3): 1.0, (2, 3): 1.0}
    assert np.linalg.det([[2, 1], [1, 2]]) == pytest.approx(res.total)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_cauchy_binet_basis(n):
    res = cauchy_binet_det(np.eye(n), np.ones(n))
    assert res.total == pytest.approx(1.0)
    assert res.terms() == {tuple(range(1, n + 1)): 1.0}


def test_cauchy_binet_four_linear_terms():
    res = cauchy_binet_det(np.array([[1, 0], [0, 1], [1, -1], [1, 1]]).T, np.ones(4))
    assert res.terms() == pytest.approx({(1, 2): 1, (1, 3): 1, (1, 4): 1, (2, 3): 1, (2, 4): 1, (3, 4): 4})
    assert res.total == pytest.approx(9.0)


def test_cauchy_binet_too_few_columns():
    with pytest.raises(ValueError):
        cauchy_binet_det(np.ones((3, 2)), np.ones(2))


def test_subset_order_lexicographic():
    S = subsets(5, 3)
    assert S.shape == (10, 3)
    assert [tuple(r) for r in S] == sorted(tuple(r) for r in S)
    assert tuple(S[0]) == (0, 1, 2) and tuple(S[-1]) == (2, 3, 4)
    with pytest.raises(ValueError):
        S[0, 0] = 9


def test_subset_cap():
    with pytest.raises(ValueError):
        subsets(MAX_SUBSET_K + 1, 2)


@settings(max_examples=200)
@given(st.integers(0, 2 ** 32 - 1))
def test_cauchy_binet_matches_direct(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    K = int(rng.integers(n, 9))
    V = rng.uniform(-1, 1, size=(n, K))
    w = 2.0 - rng.uniform(0, 2, size=K)  # (0, 2]
    direct = np.linalg.det((V * w) @ V.T)
    res = cauchy_binet_det(V, w)
    assert abs(res.total - direct) <= 1e-10 * abs(direct)
