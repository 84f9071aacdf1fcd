import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collab_atlas.embedding import TermEmbedding
from collab_atlas.transport import (OtParams, PairError, PatternError, SinkhornConvergenceError,
                                    WeightedPointPattern,
                                    make_point_pattern, pairwise_author_distances,
                                    pairwise_direct_distances, sinkhorn, solve_transport,
                                    wasserstein)
from collab_atlas.vocab import AuthorProfile, Vocabulary
from oracles import lp_transport, sq_cost


def random_pattern(r, n, d=3, owner=""):
    m = r.random(n) + 0.05
    m /= m.sum()
    m[np.argmax(m)] += 1.0 - m.sum()
    return WeightedPointPattern(r.random((n, d)), m, owner)


def test_hand_example():
    a = WeightedPointPattern([[0, 0], [1, 0]], [0.5, 0.5])
    b = WeightedPointPattern([[0, 0]], [1.0])
    d, plan = wasserstein(a, b)
    assert abs(d - math.sqrt(0.5)) < 1e-9
    assert sorted(plan.flows) == [(0, 0, 0.5), (1, 0, 0.5)]


def test_p1_on_a_line():
    a = WeightedPointPattern([[0.0], [1.0]], [0.5, 0.5])
    b = WeightedPointPattern([[2.0], [3.0]], [0.5, 0.5])
    assert wasserstein(a, b, OtParams(p=1))[0] == pytest.approx(2.0, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 9), st.integers(1, 9))
def test_simplex_matches_lp(seed, m, n):
    r = np.random.default_rng(seed)
    a, b = random_pattern(r, m), random_pattern(r, n)
    C = sq_cost(a.points, b.points)
    total, rows, cols, flows, _ = solve_transport(a.masses, b.masses, cost=C)
    assert abs(total - lp_transport(a.masses, b.masses, C)) < 1e-8
    P = np.zeros((m, n))
    P[rows, cols] = flows
    np.testing.assert_allclose(P.sum(1), a.masses, atol=1e-12)
    np.testing.assert_allclose(P.sum(0), b.masses, atol=1e-12)
    assert len(flows) <= m + n - 1


def test_coordinate_path_equals_matrix_path(rng):
    for _ in range(20):
        a, b = random_pattern(rng, 15), random_pattern(rng, 11)
        d_mat = wasserstein(a, b)[0]
        d_xy = wasserstein(a, b, OtParams(memory_budget=0))[0]
        assert d_xy == pytest.approx(d_mat, abs=1e-12)


def test_symmetry_bitwise_and_identity(rng):
    for _ in range(30):
        a, b = random_pattern(rng, 10), random_pattern(rng, 10)
        assert wasserstein(a, b)[0] == wasserstein(b, a)[0]
        assert wasserstein(a, a)[0] == 0.0


def test_triangle_inequality(rng):
    pats = [random_pattern(rng, 10) for _ in range(12)]
    D = pairwise_author_distances(pats).square()
    for i in range(12):
        for j in range(12):
            assert np.all(D[i, j] <= D[i] + D[:, j] + 1e-9)


def test_sinkhorn_never_below_exact(rng):
    for _ in range(20):
        a, b = random_pattern(rng, 8), random_pattern(rng, 7)
        exact = wasserstein(a, b)[0]
        loose = sinkhorn(a, b, OtParams(sinkhorn_lambda=5.0))
        sharp = sinkhorn(a, b, OtParams(sinkhorn_lambda=100.0))
        assert loose >= exact - 1e-12
        assert sharp >= exact - 1e-12
        assert sharp - exact < 0.05


def test_sinkhorn_reports_non_convergence(rng):
    a, b = random_pattern(rng, 8), random_pattern(rng, 7)
    with pytest.raises(SinkhornConvergenceError):
        sinkhorn(a, b, OtParams(sinkhorn_lambda=500.0, max_iter=20))


def test_parallel_equals_serial(rng):
    pats = [random_pattern(rng, 20, owner=f"a{i}") for i in range(8)]
    serial = pairwise_author_distances(pats)
    threaded = pairwise_author_distances(pats, OtParams(workers=4))
    assert serial.values.tobytes() == threaded.values.tobytes()
    assert serial.labels == [f"a{i}" for i in range(8)]


def test_pattern_validation():
    with pytest.raises(PatternError, match="sum"):
        WeightedPointPattern([[0, 0], [1, 1]], [0.5, 0.6])
    with pytest.raises(PatternError):
        WeightedPointPattern([[0, 0]], [0.0])
    a = WeightedPointPattern([[0, 0]], [1.0], "a")
    b = WeightedPointPattern([[0, 0, 0]], [1.0], "b")
    with pytest.raises(PatternError, match="dimension"):
        wasserstein(a, b)
    with pytest.raises(PairError) as err:
        pairwise_author_distances([a, b])
    assert err.value.args[0] == ("a", "b") or "a" in str(err.value)


def test_make_point_pattern_uses_profile_frequencies():
    vocab = Vocabulary(("cell", "gene", "rare"), (5, 3, 1))
    emb = TermEmbedding([1, 2], np.array([[0.0, 0.0], [1.0, 2.0]]), 0)
    pat = make_point_pattern(AuthorProfile("x", {"cell": 3, "gene": 1, "rare": 9}), emb, vocab)
    np.testing.assert_array_equal(pat.ranks, [1, 2])
    np.testing.assert_allclose(pat.masses, [0.75, 0.25])
    np.testing.assert_array_equal(pat.points, [[0, 0], [1, 2]])
    with pytest.raises(PatternError):
        make_point_pattern(AuthorProfile("y", {"rare": 2}), emb, vocab)


def test_direct_distances():
    vocab = Vocabulary(("a", "b"), (2, 2))
    D = pairwise_direct_distances([AuthorProfile("x", {"a": 1}), AuthorProfile("y", {"b": 4}),
                                   AuthorProfile("z", {"a": 2, "b": 2})], vocab)
    assert D[0, 1] == pytest.approx(math.pi / 2)
    assert D[0, 2] == pytest.approx(math.pi / 4)
    with pytest.raises(PatternError, match="empty"):
        pairwise_direct_distances([AuthorProfile("x", {}), AuthorProfile("y", {"a": 1})], vocab)
