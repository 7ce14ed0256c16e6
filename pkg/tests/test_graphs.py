"""Graphs, hop balls, reference groups, effective treatments.

Claims pinned here:
    - breadth-first balls agree with a matrix-power reachability oracle
    - balls are closed (contain the node) and monotone in the radius
    - reference groups are {i} / closed ball / everything per structure
    - count x fraction = 1 under the fair-coin design (count-fraction identity)
    - effective treatments ignore coordinate flips outside the group
    - graph file I/O round-trips and rejects malformed input
"""

import numpy as np
import pytest

from interference_lab import (
    Arbitrary,
    Assignment,
    Design,
    Graph,
    GraphFormatError,
    InvalidArgumentError,
    KLocal,
    NeighborhoodIndex,
    NoInterference,
    UnsupportedDesignError,
    effective_treatment,
    effective_treatment_count,
    effective_treatment_key,
    informative_set,
    is_exposed,
    k_step_neighborhood,
    reference_group,
)


def test_graph_construction_rejects_bad_edges():
    with pytest.raises(GraphFormatError):
        Graph.from_edges(3, [(0, 0)])
    with pytest.raises(GraphFormatError):
        Graph.from_edges(3, [(0, 1), (1, 0)])
    with pytest.raises(GraphFormatError):
        Graph.from_edges(3, [(0, 3)])


def test_k_step_neighborhood_examples():
    path = Graph.path(3)
    assert k_step_neighborhood(path, 1, 1) == {0, 1, 2}
    assert k_step_neighborhood(path, 0, 2) == {0, 1, 2}
    assert k_step_neighborhood(path, 0, 1) == {0, 1}
    for g in (path, Graph.complete(4), Graph.empty(4)):
        for i in range(g.n):
            assert k_step_neighborhood(g, i, 0) == {i}
    with pytest.raises(InvalidArgumentError):
        k_step_neighborhood(path, 7, 1)
    with pytest.raises(InvalidArgumentError):
        k_step_neighborhood(path, 0, -1)


def test_disconnected_nodes_never_enter_the_ball():
    g = Graph.from_edges(4, [(0, 1)])  # nodes 2,3 isolated from 0
    assert k_step_neighborhood(g, 0, 10) == {0, 1}


def _reach_oracle(graph, i, k):
    # ((I + A)^k)[i, j] > 0  <=>  d(i, j) <= k
    m = np.eye(graph.n, dtype=np.int64) + graph.adjacency_matrix().astype(np.int64)
    power = np.linalg.matrix_power(m, max(k, 1)) if k > 0 else np.eye(graph.n, dtype=np.int64)
    return frozenset(int(j) for j in np.nonzero(power[i])[0])


def test_bfs_matches_matrix_power_oracle():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(2, 9))
        edges = [
            (i, j)
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < 0.4
        ]
        g = Graph.from_edges(n, edges)
        for k in range(4):
            for i in range(n):
                assert k_step_neighborhood(g, i, k) == _reach_oracle(g, i, k)


def test_neighborhood_monotone_in_radius():
    g = Graph.path(6)
    for i in range(6):
        prev = frozenset()
        for k in range(6):
            ball = k_step_neighborhood(g, i, k)
            assert i in ball
            assert prev <= ball
            prev = ball


def test_neighborhood_index_masks_and_sizes():
    idx = NeighborhoodIndex.build(Graph.path(3), 1)
    assert idx.closed == (frozenset({0, 1}), frozenset({0, 1, 2}), frozenset({1, 2}))
    assert list(idx.masks()) == [0b011, 0b111, 0b110]
    assert list(idx.sizes()) == [2, 3, 2]


def test_reference_groups():
    assert reference_group(NoInterference(5), 2) == {2}
    star = Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    assert reference_group(KLocal(star, 1), 0) == {0, 1, 2, 3}
    assert reference_group(KLocal(star, 1), 1) == {0, 1}
    assert reference_group(Arbitrary(5), 2) == {0, 1, 2, 3, 4}


def test_effective_treatment_examples():
    z = Assignment.from_arms("ABB")
    assert effective_treatment(NoInterference(3), 0, z) == ("A",)
    path = KLocal(Graph.path(3), 1)
    assert effective_treatment(path, 1, Assignment.from_arms("ABA")) == ("A", "B", "A")
    assert effective_treatment(path, 0, Assignment.from_arms("ABA")) == ("A", "B")
    assert effective_treatment(Arbitrary(3), 1, z) == ("A", "B", "B")


def test_effective_treatment_counts():
    assert effective_treatment_count(NoInterference(4), 0) == 2
    path = KLocal(Graph.path(3), 1)
    assert effective_treatment_count(path, 1) == 8
    assert effective_treatment_count(path, 0) == 4
    assert effective_treatment_count(Arbitrary(4), 3) == 16


def test_informative_set_examples():
    d = Design.bd(3)
    z = Assignment.from_arms("ABA")
    assert informative_set(NoInterference(3), d, 0, z) == (4, 0.5)
    path = KLocal(Graph.path(3), 1)
    assert informative_set(path, d, 0, z) == (2, 0.25)
    assert informative_set(Arbitrary(3), d, 1, z) == (1, 0.125)
    with pytest.raises(UnsupportedDesignError):
        informative_set(NoInterference(3), Design.crd(3, 1), 0, z)


def test_count_fraction_identity():
    g = Graph.from_edges(5, [(0, 1), (1, 2), (3, 4)])
    d = Design.bd(5)
    z = Assignment.from_arms("ABABA")
    for structure in (NoInterference(5), KLocal(g, 1), KLocal(g, 2), Arbitrary(5)):
        for i in range(5):
            count = effective_treatment_count(structure, i)
            _, fraction = informative_set(structure, d, i, z)
            assert count * fraction == 1.0


def test_informative_size_matches_brute_force():
    g = Graph.from_edges(4, [(0, 1), (2, 3)])
    structure = KLocal(g, 1)
    d = Design.bd(4)
    for i in range(4):
        for code in (0, 5, 9):
            z = Assignment(code, 4)
            want = sum(
                1
                for other in range(16)
                if effective_treatment(structure, i, Assignment(other, 4))
                == effective_treatment(structure, i, z)
            )
            assert informative_set(structure, d, i, z).size == want


def test_is_exposed():
    idx = NeighborhoodIndex.build(Graph.path(3), 1)
    z = Assignment.from_arms("AAB")
    assert is_exposed(idx, 0, z, "A")
    assert not is_exposed(idx, 1, z, "A")
    assert is_exposed(idx, 2, Assignment.all_b(3), "B")
    assert all(is_exposed(idx, i, Assignment.all_b(3), "B") for i in range(3))


def test_exposure_implies_uniform_effective_treatment():
    g = Graph.from_edges(4, [(0, 1), (1, 2)])
    structure = KLocal(g, 1)
    idx = structure.index
    for code in range(16):
        z = Assignment(code, 4)
        for i in range(4):
            if is_exposed(idx, i, z, "A"):
                assert set(effective_treatment(structure, i, z)) == {"A"}


def test_effective_treatment_ignores_outside_flips():
    g = Graph.from_edges(5, [(0, 1), (2, 3)])
    structure = KLocal(g, 1)
    rng = np.random.default_rng(3)
    for _ in range(100):
        z = Assignment(int(rng.integers(0, 32)), 5)
        i = int(rng.integers(0, 5))
        group = reference_group(structure, i)
        outside = [j for j in range(5) if j not in group]
        if not outside:
            continue
        j = outside[int(rng.integers(0, len(outside)))]
        flipped = z.with_arm(j, "B" if z.arm(j) == "A" else "A")
        assert effective_treatment_key(structure, i, z) == effective_treatment_key(
            structure, i, flipped
        )


def test_graph_file_roundtrip(tmp_path):
    g = Graph.from_edges(4, [(0, 1), (1, 2), (0, 3)])
    path = tmp_path / "g.txt"
    g.to_file(path)
    assert Graph.from_file(path) == g


def test_graph_file_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("3\n0 1\n1 0\n")
    with pytest.raises(GraphFormatError):
        Graph.from_file(bad)
    bad.write_text("3\n1 1\n")
    with pytest.raises(GraphFormatError):
        Graph.from_file(bad)
    bad.write_text("x\n0 1\n")
    with pytest.raises(GraphFormatError):
        Graph.from_file(bad)
