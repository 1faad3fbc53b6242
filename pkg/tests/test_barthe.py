import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blconst.barthe import (SubsetWeights, barthe_objective, compute_dI, direction_matrix, flatten_exponents,
                            log_barthe_objective, optimize_barthe, optimize_lambda, rank1_constant,
                            rotation_gradient, weights_csv)
from blconst.datum import builtin_datum, make_datum
from blconst.gaussian import optimize_lieb
from blconst.linalg import RotationParams, cauchy_binet_det, num_angles, subsets
from blconst.report import SolverConfig
from blconst.sampling import random_datum

from conftest import parallel_datum, scaled_datum

FOUR = builtin_datum("four-linear", a=1.0)
LW2 = make_datum(2, [(1.0, [[1, 0]]), (1.0, [[0, 1]])])


def weights_of(K, n, d, q):
    S = np.array(subsets(K, n))
    q = np.asarray(q, float)
    return SubsetWeights(K, n, S, np.asarray(d, float), np.prod(q[S], axis=1))


def test_flatten_young():
    f = flatten_exponents(builtin_datum("young"))
    assert f.K == 3 and np.allclose(f.q, 2 / 3)


def test_flatten_lw3():
    f = flatten_exponents(builtin_datum("loomis-whitney", n=3))
    assert f.K == 6 and np.allclose(f.q, 0.5)


def test_flatten_mixed():
    d = make_datum(2, [(0.3, np.eye(2)), (0.7, [[1, 1]])])
    f = flatten_exponents(d)
    assert f.K == 3 and f.q.tolist() == [0.3, 0.3, 0.7]
    assert f.index == ((0, 0), (0, 1), (1, 0))


def test_dI_four_linear():
    w = compute_dI(FOUR)
    got = {I: d for I, d, _ in w.rows()}
    assert got == pytest.approx({(1, 2): 1, (1, 3): 1, (1, 4): 1, (2, 3): 1, (2, 4): 1, (3, 4): 4})
    assert np.allclose(w.q_I, 0.25)


def test_dI_lw2():
    w = compute_dI(LW2)
    assert w.d.tolist() == [1.0]


def test_dI_lw3():
    w = compute_dI(builtin_datum("loomis-whitney", n=3))
    assert len(w.d) == 20
    assert set(np.round(w.d, 12).tolist()) <= {0.0, 1.0}
    assert int(np.sum(w.d > 0.5)) == 8
    # the nonzero subsets pick one copy of each coordinate direction
    V = direction_matrix(builtin_datum("loomis-whitney", n=3))
    for I, d, _ in w.rows():
        axes = {int(np.argmax(np.abs(V[:, k - 1]))) for k in I}
        assert (d > 0.5) == (axes == {0, 1, 2})


def test_dI_too_few_directions():
    d = make_datum(3, [(1.0, [[1, 0, 0], [0, 1, 0]])])
    with pytest.raises(ValueError):
        compute_dI(d)


def test_dI_matches_cauchy_binet_terms():
    rng = np.random.default_rng(4)
    for _ in range(20):
        d = scaled_datum(rng)
        if flatten_exponents(d).K < d.n:
            continue
        R = RotationParams.from_flat(rng.uniform(0, 6, size=sum(num_angles(k) for k in d.dims)), d.dims)
        w = compute_dI(d, R)
        cb = cauchy_binet_det(direction_matrix(d, R), np.ones(w.K))
        assert np.allclose(w.d, cb.minors_sq, rtol=1e-12, atol=1e-14)


def test_rank1_reduction_exact():
    rng = np.random.default_rng(6)
    V = rng.standard_normal((5, 3))
    d = make_datum(3, [(0.6, v[None, :]) for v in V])
    w = compute_dI(d)
    for I, dI, _ in w.rows():
        direct = np.linalg.det(V[[k - 1 for k in I]]) ** 2
        assert abs(dI - direct) <= 1e-12 * max(1.0, direct)


def test_dI_continuous_in_rotation():
    d = builtin_datum("loomis-whitney", n=3)
    R0 = RotationParams.from_flat(np.array([0.4, 1.0, 2.0]), d.dims)
    R1 = RotationParams.from_flat(np.array([0.4 + 1e-7, 1.0, 2.0]), d.dims)
    assert np.max(np.abs(compute_dI(d, R0).d - compute_dI(d, R1).d)) < 1e-5


def test_objective_examples():
    q = flatten_exponents(FOUR)
    w = compute_dI(FOUR)
    assert barthe_objective(compute_dI(LW2), flatten_exponents(LW2), [1, 1]) == pytest.approx(1.0)
    assert barthe_objective(w, q, [2, 2, 1, 1]) == pytest.approx(0.5, rel=1e-14)
    assert barthe_objective(w, q, [1, 1, 1, 1]) == pytest.approx(4 / 9, rel=1e-14)


def test_objective_degenerate_signal():
    d = parallel_datum()
    assert barthe_objective(compute_dI(d), flatten_exponents(d), [1, 1]) == math.inf
    with pytest.raises(ValueError):
        barthe_objective(compute_dI(LW2), flatten_exponents(LW2), [1, 0])


def test_lambda_four_linear():
    r = optimize_lambda(compute_dI(FOUR), flatten_exponents(FOUR))
    assert r.status == "optimal"
    assert r.value == pytest.approx(0.5, abs=1e-12)
    assert np.allclose(r.lam / r.lam[-1], [2, 2, 1, 1], rtol=1e-6)


def test_lambda_lw2():
    r = optimize_lambda(compute_dI(LW2), flatten_exponents(LW2))
    assert r.value == pytest.approx(1.0)


def test_lambda_unbounded():
    r = optimize_lambda(weights_of(3, 2, [1, 1, 1], [1, 1, 1]), np.ones(3))
    assert r.status == "unbounded" and r.value == math.inf
    assert np.allclose(r.direction.u, [1, 1, 1])


def test_lambda_identically_infinite():
    d = parallel_datum()
    r = optimize_lambda(compute_dI(d), flatten_exponents(d))
    assert r.status == "unbounded" and r.direction.identically_infinite


@pytest.mark.parametrize("a", [-3.0, -0.5, 1.0])
def test_optimize_barthe_four_linear(a):
    r = optimize_barthe(builtin_datum("four-linear", a=a))
    assert r.value == pytest.approx(math.sqrt(2 / (abs(a) + abs(a + 1) + 1)), abs=1e-3)


def test_optimize_barthe_holder():
    assert optimize_barthe(builtin_datum("holder")).value == pytest.approx(1.0, abs=1e-6)


def test_optimize_barthe_young():
    assert optimize_barthe(builtin_datum("young")).value == pytest.approx(math.sqrt(3) / 2, abs=1e-4)


def test_optimize_barthe_infinite():
    r = optimize_barthe(parallel_datum())
    assert r.infinite and r.value == math.inf and r.certificate is not None


def test_optimize_barthe_deterministic():
    d = random_datum(np.random.default_rng(8))
    c = SolverConfig(starts=3, seed=2)
    assert optimize_barthe(d, c).value == optimize_barthe(d, c).value


def test_rank1_constant():
    assert rank1_constant([[1, 0], [0, 1]], [1, 1]) == pytest.approx(1.0)
    vecs = [[1, 0], [0, 1], [1, -1], [1, 1]]
    assert rank1_constant(vecs, [0.5] * 4) == pytest.approx(2 ** -0.5, abs=1e-6)
    # symmetric closed form for four planar vectors
    assert rank1_constant(vecs, [0.5] * 4) == pytest.approx(math.sqrt(2 / (2 + 1 + 1)), abs=1e-6)


def test_rank1_constant_equals_optimize_barthe():
    rng = np.random.default_rng(12)
    for _ in range(10):
        d = random_datum(rng, max_nj=1)
        vecs = [L[0] for L in d.matrices()]
        assert rank1_constant(vecs, d.p) == pytest.approx(optimize_barthe(d).value, rel=1e-9)


def test_envelope_gradient_matches_differences():
    rng = np.random.default_rng(13)
    checked = 0
    while checked < 10:
        d = random_datum(rng)
        k = sum(num_angles(x) for x in d.dims)
        if k == 0:
            continue
        q = flatten_exponents(d).q
        theta = rng.uniform(0, 2 * np.pi, size=k)

        def F(t):
            return math.log(optimize_lambda(compute_dI(d, RotationParams.from_flat(t, d.dims)), q).value)

        r = optimize_lambda(compute_dI(d, RotationParams.from_flat(theta, d.dims)), q)
        g = rotation_gradient(d, theta, r.u)
        h = 1e-5
        fd = np.array([(F(theta + h * e) - F(theta - h * e)) / (2 * h) for e in np.eye(k)])
        assert np.allclose(g, fd, atol=1e-5 * max(1.0, np.max(np.abs(fd))))
        checked += 1


def test_random_datum_gives_up_on_critical_signature():
    with pytest.raises(RuntimeError):
        random_datum(np.random.default_rng(0), signature=(2, [2, 1, 1], [0.5, 0.5, 0.5]), max_tries=5)


def test_fd_gradient_option_agrees():
    d = random_datum(np.random.default_rng(14), signature=(2, [2, 1, 1, 1], [0.4, 0.4, 0.4, 0.4]))
    c = SolverConfig(starts=2)
    a = optimize_barthe(d, c, gradient="envelope").value
    b = optimize_barthe(d, c, gradient="fd").value
    assert a == pytest.approx(b, rel=1e-3)
    with pytest.raises(ValueError):
        optimize_barthe(d, c, gradient="exact")


def test_matches_lieb_small_sample():
    rng = np.random.default_rng(15)
    for _ in range(4):
        d = random_datum(rng)
        a, b = optimize_lieb(d).value, optimize_barthe(d).value
        assert abs(a - b) <= 1e-3 * b


@settings(max_examples=50)
@given(st.integers(0, 2 ** 32 - 1))
def test_inner_concavity(seed):
    rng = np.random.default_rng(seed)
    K, n = int(rng.integers(2, 7)), int(rng.integers(1, 3))
    if K < n:
        return
    q = rng.uniform(0.1, 1.0, size=K)
    w = weights_of(K, n, rng.uniform(0.01, 2, size=len(subsets(K, n))), q)
    u0, u1 = rng.uniform(-3, 3, size=K), rng.uniform(-3, 3, size=K)
    f = lambda u: log_barthe_objective(w, q, np.exp(u))
    assert f(0.5 * (u0 + u1)) >= 0.5 * (f(u0) + f(u1)) - 1e-10


@settings(max_examples=50)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1e-3, 1e3))
def test_global_lambda_scaling(seed, t):
    rng = np.random.default_rng(seed)
    d = scaled_datum(rng)
    if flatten_exponents(d).K < d.n:
        return
    w, q = compute_dI(d), flatten_exponents(d)
    lam = np.exp(rng.uniform(-2, 2, size=w.K))
    base = barthe_objective(w, q, lam)
    if not math.isfinite(base):
        return
    assert barthe_objective(w, q, t * lam) == pytest.approx(base, rel=1e-10)


def test_semicontinuity_bound_and_lower_bound():
    rng = np.random.default_rng(16)
    for _ in range(50):
        K, n = int(rng.integers(3, 7)), 2
        q = rng.dirichlet(np.ones(K)) * n
        if np.any(q >= 1):
            continue
        N = len(subsets(K, n))
        d_ref = rng.uniform(0.2, 2.0, size=N)
        D = d_ref.min()
        delta = rng.uniform(0, 0.5) * D
        d = d_ref + delta * rng.choice([-1.0, 1.0], size=N)
        ref = optimize_lambda(weights_of(K, n, d_ref, q), q)
        per = optimize_lambda(weights_of(K, n, d, q), q)
        assert per.value <= ref.value / (1 - delta / D) + 1e-9
        for _ in range(5):
            lam = np.exp(rng.uniform(-2, 2, size=K))
            assert per.value >= barthe_objective(weights_of(K, n, d, q), q, lam) - 1e-12


def test_weights_csv():
    text = weights_csv(compute_dI(FOUR))
    lines = text.strip().split("\n")
    assert lines[0] == "subset,d_I,q_I"
    assert lines[1] == "1-2,1.0,0.25"
    assert lines[-1] == "3-4,4.0,0.25"
    assert len(lines) == 7
