import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from attdecode.errors import DuplicateEdge, LengthMismatch, NonFiniteAttribute, SelfLoop, UnknownNodeId
from attdecode.graph import (
    ABSENT,
    AttributedNetwork,
    build_network,
    connected_components,
    degree_density,
    load_network,
    local_density,
    upper_level_set,
    write_network,
)

from oracles import reachability_components


def net_from(n, edges):
    return AttributedNetwork(tuple(str(i) for i in range(n)), np.array(edges, dtype=int).reshape(-1, 2), np.zeros((n, 0)))


PATH = build_network([("a", "b"), ("b", "c")], [("a", 0.0), ("b", 1.0), ("c", 2.0)])


@st.composite
def graphs(draw, max_n=9):
    n = draw(st.integers(1, max_n))
    pairs = list(itertools.combinations(range(n), 2))
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True) if pairs else st.just([]))
    return net_from(n, chosen)


class TestBuild:
    def test_small(self):
        assert PATH.n == 3 and PATH.n_edges == 2 and PATH.p == 1
        assert PATH.node_ids == ("a", "b", "c")

    def test_self_loop(self):
        with pytest.raises(SelfLoop):
            build_network([("a", "a")], [("a", 1.0)])

    def test_unknown_id(self):
        with pytest.raises(UnknownNodeId):
            build_network([("a", "b")], [("a", 1.0)])

    def test_duplicate_edge_either_direction(self):
        with pytest.raises(DuplicateEdge):
            build_network([("a", "b"), ("b", "a")], [("a", 1.0), ("b", 2.0)])

    def test_non_finite(self):
        with pytest.raises(NonFiniteAttribute):
            build_network([], [("a", float("nan"))])

    def test_no_attribute_table(self):
        net = build_network([("x", "y"), ("y", "z")])
        assert net.p == 0 and net.node_ids == ("x", "y", "z")

    def test_index_follows_attribute_table_order(self):
        net = build_network([("c", "a")], [("c", 1.0), ("b", 2.0), ("a", 3.0)])
        assert net.node_ids == ("c", "b", "a")
        assert net.edges.tolist() == [[0, 2]]

    def test_csv_roundtrip(self, tmp_path):
        write_network(PATH, tmp_path / "e.csv", tmp_path / "x.csv")
        again = load_network(tmp_path / "e.csv", tmp_path / "x.csv")
        assert again.node_ids == PATH.node_ids
        assert np.array_equal(again.edges, PATH.edges)
        assert np.array_equal(again.attributes, PATH.attributes)


class TestLevelSets:
    def test_path_example(self):
        sub = upper_level_set(PATH, [0.9, 0.5, 0.8], 0.6)
        assert sub.nodes.indices.tolist() == [0, 2]
        assert len(sub.edges) == 0
        labels = connected_components(sub)
        assert labels.tolist() == [0, ABSENT, 1]

    def test_threshold_is_inclusive(self):
        sub = upper_level_set(PATH, [0.6, 0.6, 0.1], 0.6)
        assert sub.nodes.count == 2 and len(sub.edges) == 1

    def test_vacuous_and_empty(self):
        sub = upper_level_set(PATH, [0.9, 0.5, 0.8], -np.inf)
        assert sub.nodes.count == 3 and len(sub.edges) == 2
        assert upper_level_set(PATH, [0.9, 0.5, 0.8], 1.0).nodes.count == 0

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            upper_level_set(PATH, [1.0, 2.0], 0.0)

    def test_components(self):
        two_triangles = net_from(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
        labels = connected_components(upper_level_set(two_triangles, np.ones(6), 0))
        assert labels.tolist() == [0, 0, 0, 1, 1, 1]
        assert connected_components(upper_level_set(PATH, np.ones(3), 0)).tolist() == [0, 0, 0]

    def test_numbering_by_smallest_index(self):
        net = net_from(5, [(4, 0), (1, 3)])
        assert connected_components(upper_level_set(net, np.ones(5), 0)).tolist() == [0, 1, 2, 1, 0]

    @settings(max_examples=200, deadline=None)
    @given(graphs(), st.data())
    def test_components_match_closure(self, net, data):
        keep = np.array(data.draw(st.lists(st.booleans(), min_size=net.n, max_size=net.n)))
        delta = keep.astype(float)
        labels = connected_components(upper_level_set(net, delta, 0.5))
        expected = reachability_components(net.n, net.edges.tolist(), keep)
        got = {frozenset(np.flatnonzero(labels == c).tolist()) for c in set(labels.tolist()) - {ABSENT}}
        assert got == set(expected)
        assert (labels[~keep] == ABSENT).all()

    @settings(max_examples=100, deadline=None)
    @given(graphs(), st.data())
    def test_nesting(self, net, data):
        delta = np.array(data.draw(st.lists(st.floats(0, 1), min_size=net.n, max_size=net.n)))
        l1, l2 = sorted(data.draw(st.lists(st.floats(0, 1), min_size=2, max_size=2)))
        hi, lo = upper_level_set(net, delta, l2), upper_level_set(net, delta, l1)
        assert not (hi.nodes.mask & ~lo.nodes.mask).any()
        assert {tuple(e) for e in hi.edges} <= {tuple(e) for e in lo.edges}

    @settings(max_examples=100, deadline=None)
    @given(graphs(), st.randoms(use_true_random=False))
    def test_permutation_stability(self, net, rnd):
        perm = list(range(net.n))
        rnd.shuffle(perm)
        perm = np.array(perm)
        inv = np.argsort(perm)
        # node i of the permuted graph is node perm[i] of the original
        pnet = net_from(net.n, inv[net.edges])
        base = connected_components(upper_level_set(net, np.ones(net.n), 0))
        back = connected_components(upper_level_set(pnet, np.ones(net.n), 0))[inv]
        same = lambda lab: {frozenset(np.flatnonzero(lab == c).tolist()) for c in set(lab.tolist())}
        assert same(base) == same(back)


class TestStructuralDensities:
    def test_degree(self):
        assert degree_density(net_from(3, [(0, 1), (1, 2), (0, 2)])).values.tolist() == [2, 2, 2]
        star = net_from(4, [(0, 1), (0, 2), (0, 3)])
        assert degree_density(star).values.tolist() == [3, 1, 1, 1]
        assert degree_density(net_from(3, [])).values.tolist() == [0, 0, 0]

    @settings(max_examples=100, deadline=None)
    @given(graphs())
    def test_degree_sum(self, net):
        assert degree_density(net).values.sum() == 2 * net.n_edges

    def test_local(self):
        assert local_density(net_from(3, [(0, 1), (1, 2), (0, 2)])).values.tolist() == [1.0, 1.0, 1.0]
        star = net_from(5, [(0, 1), (0, 2), (0, 3)])
        v = local_density(star).values
        assert v[0] == pytest.approx(0.5)
        assert v[1] == pytest.approx(1.0)  # leaf + centre: one edge of one possible
        assert v[4] == 0.0

    @settings(max_examples=100, deadline=None)
    @given(graphs())
    def test_local_matches_enumeration(self, net):
        v = local_density(net).values
        edges = {tuple(e) for e in net.edges.tolist()}
        for i in range(net.n):
            ego = {i} | {j for e in edges for j in e if i in e}
            m = sum(1 for a, b in edges if a in ego and b in ego)
            k = len(ego)
            assert v[i] == pytest.approx(m / (k * (k - 1) / 2) if k >= 2 else 0.0)
