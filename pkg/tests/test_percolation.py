import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skilltext.graph_model import BipartiteGraph, SingleClassConfig
from skilltext.learners import psi_one_skill
from skilltext.percolation import (UnionFind, association_graph, condition_value, g1, giant_component_sim,
                                   largest_association_component, mu_fixed_point, p_giant_theory, region_scan,
                                   threshold_R_for_c)
from oracles import bfs_component_sizes


@given(st.integers(1, 200).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=300))))
@settings(max_examples=200, deadline=None)
def test_union_find_matches_bfs(case):
    n, edges = case
    uf = UnionFind(n)
    for a, b in edges:
        uf.union(a, b)
    _, counts = np.unique(uf.labels(), return_counts=True)
    assert sorted(counts.tolist(), reverse=True) == bfs_component_sizes(n, edges)


class TestAssociationGraph:
    def test_three_nodes(self):
        g = BipartiteGraph.from_edge_list(3, 2, [(0, 0), (1, 0), (1, 1), (2, 1)])
        learned = np.ones(3, dtype=bool)
        ag = association_graph(g, learned)
        assert ag.edges == {(0, 1), (1, 2)}
        assert ag.component_sizes().tolist() == [3]
        assert largest_association_component(g, learned) / 3 == 1.0

    def test_unlearned_skill_breaks_chain(self):
        g = BipartiteGraph.from_edge_list(3, 2, [(0, 0), (1, 0), (1, 1), (2, 1)])
        learned = np.array([True, False, True])
        assert association_graph(g, learned).edges == set()
        assert largest_association_component(g, learned) == 1

    def test_nothing_learned(self):
        g = BipartiteGraph.from_edge_list(2, 1, [(0, 0), (1, 0)])
        assert largest_association_component(g, np.zeros(2, bool)) == 0

    @given(st.integers(1, 15).flatmap(lambda n: st.tuples(
        st.just(n),
        st.lists(st.lists(st.integers(0, n - 1), max_size=6), max_size=12),
        st.lists(st.booleans(), min_size=n, max_size=n))))
    @settings(max_examples=200, deadline=None)
    def test_chain_shortcut_matches_cliques(self, case):
        n, texts, learned = case
        learned = np.array(learned)
        edges = [(s, t) for t, sk in enumerate(texts) for s in sk]
        g = BipartiteGraph.from_edge_list(n, len(texts), edges)
        ag = association_graph(g, learned)
        assert all(a < b and learned[a] and learned[b] for a, b in ag.edges)
        assert set(ag.nodes.tolist()) == set(np.flatnonzero(learned).tolist())
        idx = {int(s): i for i, s in enumerate(ag.nodes)}
        sizes = bfs_component_sizes(len(idx), [(idx[a], idx[b]) for a, b in ag.edges])
        assert largest_association_component(g, learned) == (sizes[0] if sizes else 0)
        assert ag.component_sizes().tolist() == sizes


class TestMuFixedPoint:
    def test_zeta_zero(self):
        assert mu_fixed_point(3.0, 1.5, 0.0) == (1.0, 1.0)

    def test_no_texts(self):
        r = p_giant_theory(3.0, 0.0)
        assert (r.mu_s, r.mu_t) == (1.0, 1.0)
        assert r.p_G == 0.0 and not r.giant_exists

    def test_nontrivial_at_3_15(self):
        r = p_giant_theory(3.0, 1.5)
        assert r.giant_exists and r.mu_s < 0.5 and r.monotone
        assert 0 < r.p_G <= r.zeta <= 1

    def test_rejects_bad_zeta(self):
        with pytest.raises(ValueError):
            mu_fixed_point(3.0, 1.0, 1.5)

    @given(st.floats(0.1, 6.0), st.floats(0.0, 4.0), st.floats(0.0, 1.0))
    @settings(max_examples=200, deadline=None)
    def test_iteration_monotone_and_bounded(self, c, R, zeta):
        mu_s, mu_t, _, mono = mu_fixed_point(c, R, zeta, return_info=True)
        assert mono
        assert 0.0 <= mu_s <= 1.0 and 0.0 <= mu_t <= 1.0

    @given(st.floats(0.1, 6.0), st.floats(0.0, 4.0), st.floats(0.0, 1.0))
    @settings(max_examples=200, deadline=None)
    def test_g1_convex(self, c, R, zeta):
        y = g1(np.linspace(0, 1, 101), c, R, zeta)
        assert np.all(np.diff(y, 2) >= -1e-9)


def test_condition_consistency_on_grid():
    cs = np.linspace(0.5, 5.0, 19)
    Rs = np.linspace(0.2, 3.0, 15)
    checked = 0
    for c in cs:
        for R in Rs:
            r = p_giant_theory(float(c), float(R))
            if abs(r.condition_value - 1.0) < 0.05:
                continue  # critical slowing: mu_s approaches 1 arbitrarily slowly
            assert r.giant_exists == (r.mu_s < 1 - 1e-6), (c, R)
            checked += 1
    assert checked > 200


class TestRegion:
    def test_zero_R_column_false(self):
        scan = region_scan([1.0, 2.0, 3.0], [0.0, 1.5], resolution=1e-2)
        assert not scan.giant_exists[:, 0].any()

    def test_point_consistent_with_theory(self):
        scan = region_scan([3.0, 3.5], [1.0, 1.5])
        assert scan.giant_exists[0, 1] == p_giant_theory(3.0, 1.5).giant_exists is True

    def test_threshold_bisection(self):
        R = threshold_R_for_c(3.0, resolution=1e-4)
        assert condition_value(3.0, R) > 1 >= condition_value(3.0, R - 2e-4)

    def test_vectorized_condition(self):
        v = condition_value(np.array([1.0, 3.0]), 1.5)
        assert v[1] == pytest.approx(p_giant_theory(3.0, 1.5).condition_value)

    def test_min_locator(self):
        scan = region_scan(np.linspace(1, 4, 31), np.linspace(0.5, 3, 26), resolution=1e-3)
        i = int(np.nanargmin(scan.threshold_R))
        assert scan.min_R == scan.threshold_R[i] and scan.c_at_min == scan.c_values[i]

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            region_scan([1.0], [1.0, 2.0])


class TestSimulation:
    def test_iid_mode_matches_theory(self):
        cfg = SingleClassConfig(8000, 1.5, 3.0, seed=4)
        est = giant_component_sim(cfg, psi_one_skill(), 5, mode="iid-zeta")
        assert abs(est.mean - p_giant_theory(3.0, 1.5).p_G) < 0.02

    def test_actual_mode_runs(self):
        est = giant_component_sim(SingleClassConfig(3000, 2.0, 3.0, seed=1), psi_one_skill(), 2)
        assert 0.0 < est.mean <= 1.0

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            giant_component_sim(SingleClassConfig(10, 1.0, 1.0), psi_one_skill(), 1, mode="other")
