import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from lxml import etree
from sklearn.metrics import adjusted_rand_score

from collab_atlas.geometry import CondensedDistanceMatrix
from collab_atlas.graph import (AuthorGraph, EmptyClusterError, build_author_graph,
                                characteristic_words, closeness_centrality, degree_stats,
                                epsilon_threshold, graphml_schema_path, hop_distances,
                                knn_adjacency, louvain, louvain_replicates, modularity,
                                permutation_null, relative_excess, symmetrize,
                                within_cluster_distance, write_dot, write_graphml)
from collab_atlas.graph.metrics import adjusted_rand_index
from collab_atlas.vocab import AuthorProfile
from oracles import bfs_distances, best_modularity, naive_modularity


def adj_from_edges(n, edges):
    A = np.zeros((n, n), dtype=int)
    for u, v in edges:
        A[u, v] = A[v, u] = 1
    return A


TWO_TRIANGLES = adj_from_edges(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)])


def cdm(D, labels=None):
    n = len(D)
    return CondensedDistanceMatrix.from_square(np.asarray(D, float), "author",
                                               labels or [f"a{i}" for i in range(n)])


# construction

def test_epsilon_is_max_nearest_neighbour():
    D = [[0, 1, 4], [1, 0, 3], [4, 3, 0]]
    assert epsilon_threshold(cdm(D)) == 3.0
    with pytest.raises(ValueError):
        epsilon_threshold(cdm([[0]]))


def test_knn_inclusive_threshold_and_label_ties():
    D = [[0, 1, 1, 5], [1, 0, 2, 5], [1, 2, 0, 5], [5, 5, 5, 0]]
    W = cdm(D, ["d", "c", "b", "a"])
    A = knn_adjacency(W, 5.0, 1)
    # vertex 0 is tied between labels "c" (1) and "b" (2): "b" sorts first
    assert A[0].tolist() == [0, 0, 1, 0]
    # vertex 3 defines epsilon exactly and keeps its edge
    assert A[3].sum() == 1
    assert knn_adjacency(W, 4.9, 1)[3].sum() == 0


def test_symmetrize_is_union():
    A = np.array([[0, 1, 0], [0, 0, 0], [1, 0, 0]])
    assert symmetrize(A).tolist() == [[0, 1, 1], [1, 0, 0], [1, 0, 0]]


def test_build_author_graph_fields():
    g = build_author_graph(cdm([[0, 1, 4], [1, 0, 3], [4, 3, 0]]), k=1)
    assert g.epsilon == 3.0 and g.k == 1
    assert g.edges() == [(0, 1), (1, 2)]
    assert g.degrees().tolist() == [1, 2, 1]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 15), st.integers(1, 5))
def test_no_isolated_vertex_property(seed, n, k):
    r = np.random.default_rng(seed)
    X = r.random((n, 3))
    D = np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1))
    g = build_author_graph(cdm(D), k=k)
    assert (g.undirected == g.undirected.T).all()
    assert g.degrees().min() >= 1
    assert (g.directed.sum(axis=1) <= k).all()


# modularity and Louvain

def test_modularity_matches_naive_and_networkx(rng):
    for _ in range(20):
        n = int(rng.integers(3, 12))
        A = np.triu((rng.random((n, n)) < 0.4).astype(int), 1)
        A = A + A.T
        if A.sum() == 0:
            continue
        labels = rng.integers(0, 3, n).tolist()
        assert abs(modularity(A, labels) - naive_modularity(A, labels)) < 1e-12
        G = nx.from_numpy_array(A)
        comms = [set(np.flatnonzero(np.array(labels) == c)) for c in set(labels)]
        assert abs(modularity(A, labels) - nx.community.modularity(G, comms)) < 1e-12


def test_large_graph_modularity_path(rng):
    n = 90
    A = np.triu((rng.random((n, n)) < 0.1).astype(int), 1)
    A = A + A.T
    labels = rng.integers(0, 5, n).tolist()
    assert abs(modularity(A, labels) - naive_modularity(A, labels)) < 1e-12


def test_two_triangles():
    p = louvain(TWO_TRIANGLES, seed=3)
    assert p.communities() == [[0, 1, 2], [3, 4, 5]]
    assert abs(p.modularity - naive_modularity(TWO_TRIANGLES, p.assignment)) < 1e-12


def test_two_disjoint_edges():
    p = louvain(adj_from_edges(4, [(0, 1), (2, 3)]))
    assert p.modularity == pytest.approx(0.5, abs=1e-12)
    assert p.n_communities == 2


def test_edgeless_graph():
    p = louvain(np.zeros((3, 3)))
    assert p.assignment == [0, 1, 2] and p.modularity == 0.0


def test_replicates_deterministic_and_summarized():
    s1 = louvain_replicates(TWO_TRIANGLES, n_reps=5, seed=9)
    s2 = louvain_replicates(TWO_TRIANGLES, n_reps=5, seed=9, workers=2)
    assert s1.best == s2.best
    assert s1.replicate_q == s2.replicate_q
    assert sum(s1.community_counts.values()) == 5


def test_small_graphs_near_optimal():
    for n in range(2, 7):
        for G in nx.graph_atlas_g():
            if G.number_of_nodes() != n or not nx.is_connected(G):
                continue
            A = nx.to_numpy_array(G, dtype=int)
            q = louvain_replicates(A, n_reps=5, seed=0).best.modularity
            assert q >= 0.95 * best_modularity(A) - 1e-12


# paths

def test_hop_distances_and_closeness_match_bfs(rng):
    for _ in range(10):
        n = int(rng.integers(2, 30))
        A = np.triu((rng.random((n, n)) < 0.12).astype(int), 1)
        A = A + A.T
        D = hop_distances(A)
        cl = closeness_centrality(A)
        for s in range(n):
            ref = bfs_distances(A, s)
            got = [int(d) if np.isfinite(d) else -1 for d in D[s]]
            assert got == ref
            reach = sum(d for d in ref if d > 0)
            if reach:
                assert cl.values[s] == pytest.approx(1.0 / reach)
            else:
                assert s in cl.isolated and s not in cl.values


def test_giant_component_flags():
    A = adj_from_edges(5, [(0, 1), (1, 2), (3, 4)])
    cl = closeness_centrality(A)
    assert cl.giant == [True, True, True, False, False]
    assert cl.mean_over([0, 3]) == pytest.approx(cl.values[0])
    assert cl.mean_over([0, 3], giant_only=False) == pytest.approx((cl.values[0] + 1.0) / 2)


def test_within_cluster_on_a_path():
    A = adj_from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)])
    out = within_cluster_distance(A, ["x", "x", "y", "x", "z"])
    # pairs (0,1)=1, (0,3)=3, (1,3)=2
    assert out["x"].mean == pytest.approx(2.0)
    assert out["y"].singleton and math.isnan(out["y"].mean)
    out = within_cluster_distance(A, ["x", "y", "x", "y", "x"])
    assert out["x"].mean == pytest.approx((2 + 4 + 2) / 3)
    assert out["y"].mean == 2.0


def test_within_cluster_unreachable_policy():
    A = adj_from_edges(4, [(0, 1), (2, 3)])
    out = within_cluster_distance(A, ["g", "g", "g", "h"])
    assert out["g"].n_pairs == 1 and out["g"].n_unreachable == 2 and out["g"].mean == 1.0
    with pytest.raises(ValueError, match="disconnected"):
        within_cluster_distance(A, ["g", "g", "g", "h"], unreachable="error")


def test_permutation_null_summary():
    A = TWO_TRIANGLES
    res = permutation_null(A, ["a"] * 3 + ["b"] * 3, n_reps=300, seed=1)
    for g in ("a", "b"):
        s = res[g]
        assert s.observed == 1.0
        assert len(s.samples) == 300
        assert s.quantiles["q2.5"] <= s.quantiles["q50"] <= s.quantiles["q97.5"]
        assert s.p_value == pytest.approx(np.mean(np.asarray(s.samples) <= 1.0))
        # only 2 of the 20 equally likely triples are the triangles themselves
        assert s.p_value == pytest.approx(0.1, abs=0.06)
    again = permutation_null(A, ["a"] * 3 + ["b"] * 3, n_reps=300, seed=1)
    assert again["a"].samples == res["a"].samples


def test_ari_matches_sklearn_and_properties(rng):
    for _ in range(30):
        n = int(rng.integers(2, 40))
        a = rng.integers(0, 4, n).tolist()
        b = rng.integers(0, 3, n).tolist()
        assert adjusted_rand_index(a, b) == pytest.approx(adjusted_rand_score(a, b), abs=1e-12)
        assert adjusted_rand_index(a, b) == pytest.approx(adjusted_rand_index(b, a), abs=1e-15)
        relabel = [f"c{x * 7}" for x in a]
        assert adjusted_rand_index(a, relabel) == pytest.approx(1.0)


def test_ari_mappings():
    assert adjusted_rand_index({"u": 1, "v": 1, "w": 2}, {"w": "x", "u": "y", "v": "y"}) == 1.0
    with pytest.raises(ValueError):
        adjusted_rand_index({"u": 1}, {"v": 1})
    with pytest.raises(ValueError):
        adjusted_rand_index([1, 2], [1])


def test_degree_stats():
    assert degree_stats(adj_from_edges(4, [(0, 1), (0, 2), (0, 3)])) == (1, 3, 1.5)


# characteristic words

def test_relative_excess():
    assert relative_excess(0.3, 0.1) == pytest.approx(2.0)


def test_characteristic_words_ranking():
    clusters = {
        "c1": [AuthorProfile("a", {"alpha": 10, "common": 10}), {"alpha": 5, "common": 5}],
        "c2": [AuthorProfile("b", {"beta": 10, "common": 30})],
    }
    out = characteristic_words(clusters, top_m=2, min_count=5)
    # global pool: alpha 15, beta 10, common 45 of 70
    assert [w for w, _ in out["c1"]] == ["alpha", "common"]
    assert out["c1"][0][1] == pytest.approx((15 / 30 - 15 / 70) / (15 / 70))
    assert [w for w, _ in out["c2"]][0] == "beta"
    rare = characteristic_words(clusters, min_count=11)
    assert "beta" not in [w for w, _ in rare["c2"]]
    with pytest.raises(EmptyClusterError):
        characteristic_words({"x": []})


# export

def small_graph():
    A = adj_from_edges(3, [(0, 1), (1, 2)])
    return AuthorGraph(["ap", "bq", "cr"], A, A, 0.5, 1)


def test_graphml_valid_and_round_trips(tmp_path):
    g = small_graph()
    attrs = {"display_name": ["Art P", "B \"Q\"", "Cé R"], "cluster": np.array([0, 0, 1]),
             "closeness": [0.5, 1.0, 0.5]}
    write_graphml(g, tmp_path / "g.graphml", attrs)
    schema = etree.XMLSchema(etree.parse(str(graphml_schema_path())))
    doc = etree.parse(str(tmp_path / "g.graphml"))
    schema.assertValid(doc)
    G = nx.read_graphml(tmp_path / "g.graphml")
    assert sorted(G.edges()) == [("n0", "n1"), ("n1", "n2")]
    assert G.nodes["n2"]["display_name"] == "Cé R"
    assert G.nodes["n0"]["cluster"] == 0


def test_schema_rejects_dangling_edge(tmp_path):
    write_graphml(small_graph(), tmp_path / "g.graphml")
    text = (tmp_path / "g.graphml").read_text(encoding="utf-8").replace('target="n2"', 'target="n9"')
    schema = etree.XMLSchema(etree.parse(str(graphml_schema_path())))
    assert not schema.validate(etree.fromstring(text.encode()))


def test_dot_output(tmp_path):
    write_dot(small_graph(), tmp_path / "g.dot", {"display_name": ["A", 'B "Q"', "C"]})
    text = (tmp_path / "g.dot").read_text(encoding="utf-8")
    assert text.startswith("graph authors {")
    assert "n0 -- n1;" in text and "n1 -- n2;" in text
    assert 'display_name="B \\"Q\\""' in text
    with pytest.raises(ValueError, match="one value per vertex"):
        write_dot(small_graph(), tmp_path / "x.dot", {"bad": [1]})
