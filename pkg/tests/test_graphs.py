from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aqc_workbench.graphs import (
    ENUMERATION_LIMIT,
    CnfFormula,
    EnumerationLimitError,
    ExactCoverInstance,
    GenerationError,
    Graph,
    brute_force_max_clique,
    brute_force_mis,
    clause_count,
    complement,
    connected_graphs_upto,
    count_exact_cover,
    count_sat,
    exact_cover_solutions,
    format_dimacs,
    format_exact_cover,
    format_graph,
    gen_exact_cover_usa,
    gen_planar_subcubic,
    gen_random_3sat,
    gen_random_graph,
    index_from_spins,
    is_independent,
    max_degree,
    parse_dimacs,
    parse_exact_cover,
    parse_graph,
    spins_from_index,
)


def graphs(max_n=8):
    @st.composite
    def build(draw):
        n = draw(st.integers(0, max_n))
        pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
        keep = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
        return Graph(n, frozenset(p for p, k in zip(pairs, keep) if k))

    return build()


class TestGraphType:
    def test_rejects_self_loop(self):
        with pytest.raises(ValueError, match="self-loop"):
            Graph(3, frozenset({(1, 1)}))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="out of range"):
            Graph(2, frozenset({(0, 2)}))

    def test_from_edges_rejects_duplicates(self):
        with pytest.raises(ValueError, match="duplicate"):
            Graph.from_edges(3, [(0, 1), (1, 0)])

    def test_edges_are_normalized(self):
        assert Graph(3, frozenset({(2, 0)})).edges == {(0, 2)}

    def test_grid(self):
        g = Graph.grid(3, 4)
        assert g.n == 12 and g.m == 17
        assert max_degree(g) == 4


class TestComplement:
    def test_empty_to_triangle(self):
        assert complement(Graph.empty(3)) == Graph.complete(3)

    def test_path(self, p3):
        assert complement(p3).edges == {(0, 2)}

    def test_involution_on_random_graphs(self):
        for s in range(50):
            g = gen_random_graph(8, 0.5, s)
            assert complement(complement(g)) == g

    @given(graphs())
    def test_involution_property(self, g):
        assert complement(complement(g)) == g


class TestRandomGraph:
    def test_p_zero_and_one(self):
        assert gen_random_graph(5, 0.0, 1).m == 0
        assert gen_random_graph(5, 1.0, 1) == Graph.complete(5)

    def test_edge_count_binomial(self):
        m = gen_random_graph(100, 0.5, 7).m
        assert abs(m - 2475) <= 5 * 35.2

    def test_reproducible(self):
        assert gen_random_graph(12, 0.5, 3) == gen_random_graph(12, 0.5, 3)

    def test_bad_probability(self):
        with pytest.raises(ValueError):
            gen_random_graph(4, 1.5, 0)


class TestRandom3Sat:
    def test_clause_count_rounding(self):
        assert clause_count(8, 4.25) == 34
        assert clause_count(10, 4.25) == 43
        assert gen_random_3sat(8, 4.25, 0).m == 34

    def test_single_clause(self):
        f = gen_random_3sat(3, 1 / 3, 5)
        assert f.m == 1
        assert sorted(v for v, _ in f.clauses[0]) == [0, 1, 2]

    def test_satisfiable_fraction_is_mixed(self):
        sat = [count_sat(gen_random_3sat(12, 4.25, s)) > 0 for s in range(200)]
        assert 0 < sum(sat) < 200

    def test_too_few_variables(self):
        with pytest.raises(ValueError):
            gen_random_3sat(2, 4.25, 0)

    def test_reproducible(self):
        assert gen_random_3sat(9, seed=11) == gen_random_3sat(9, seed=11)

    def test_clause_validation(self):
        with pytest.raises(ValueError):
            CnfFormula(3, (((0, False), (0, True), (1, False)),))


class TestExactCover:
    def test_two_clause_count(self):
        e = ExactCoverInstance(4, ((0, 1, 2), (1, 2, 3)))
        assert count_exact_cover(e) == 3
        # bit i of the index is x_i
        expected = {0b1001, 0b0010, 0b0100}
        assert set(exact_cover_solutions(e)) == expected

    def test_single_clause_three_solutions(self):
        assert count_exact_cover(ExactCoverInstance(3, ((0, 1, 2),))) == 3

    @pytest.mark.parametrize("n", [4, 5, 8, 10])
    def test_usa_unique(self, n):
        for s in range(5):
            e = gen_exact_cover_usa(n, s)
            assert count_exact_cover(e) == 1

    def test_usa_impossible_for_n3(self):
        # the only clause on 3 bits leaves 3 solutions however often it repeats
        with pytest.raises(GenerationError):
            gen_exact_cover_usa(3, 0, max_restarts=3)

    def test_usa_reproducible(self):
        assert gen_exact_cover_usa(9, 21) == gen_exact_cover_usa(9, 21)


class TestOracles:
    def test_mis_k2(self, k2):
        assert brute_force_mis(k2) == (1, [frozenset({0}), frozenset({1})])

    def test_mis_triangle(self, triangle):
        size, sets = brute_force_mis(triangle)
        assert size == 1 and len(sets) == 3

    def test_mis_c5(self):
        size, sets = brute_force_mis(Graph.cycle(5))
        assert size == 2 and len(sets) == 5

    def test_mis_sets_are_valid(self):
        for s in range(20):
            g = gen_random_graph(9, 0.4, s)
            size, sets = brute_force_mis(g)
            assert all(len(x) == size and is_independent(g, x) for x in sets)
            # no independent set is larger (independent recount)
            best = max(
                len(c) for k in range(g.n + 1) for c in itertools.combinations(range(g.n), k)
                if is_independent(g, c)
            )
            assert best == size

    def test_clique(self):
        assert brute_force_max_clique(Graph.complete(4)) == (4, [frozenset(range(4))])
        size, sets = brute_force_max_clique(Graph.empty(4))
        assert size == 1 and len(sets) == 4

    def test_clique_mis_duality(self):
        for s in range(100):
            g = gen_random_graph(10, 0.5, s)
            assert brute_force_max_clique(g)[0] == brute_force_mis(complement(g))[0]

    def test_count_sat_examples(self):
        assert count_sat(CnfFormula(4, ())) == 16
        assert count_sat(CnfFormula(3, (((0, False), (1, False), (2, False)),))) == 7

    def test_enumeration_guard(self):
        with pytest.raises(EnumerationLimitError):
            brute_force_mis(Graph.empty(ENUMERATION_LIMIT + 1))

    def test_max_degree(self):
        assert max_degree(Graph.complete(2)) == 1
        assert max_degree(Graph.from_edges(4, [(0, 1), (0, 2), (0, 3)])) == 3
        assert max_degree(Graph.cycle(5)) == 2

    def test_connected_atlas(self):
        counts = [sum(g.n == k for g in connected_graphs_upto(5)) for k in range(1, 6)]
        assert counts == [1, 1, 2, 6, 21]


class TestPlanarSampler:
    def test_degree_and_reproducibility(self):
        for s in range(30):
            g = gen_planar_subcubic(12, s)
            assert max_degree(g) <= 3
            assert g == gen_planar_subcubic(12, s)


class TestSpinConvention:
    def test_bit_zero_is_plus(self):
        assert list(spins_from_index(0b10, 3)) == [1, -1, 1]
        assert index_from_spins([1, -1, 1]) == 0b10

    @given(st.integers(0, 2 ** 10 - 1))
    def test_round_trip(self, b):
        assert index_from_spins(spins_from_index(b, 10)) == b


class TestFormats:
    @settings(max_examples=30)
    @given(graphs())
    def test_graph_round_trip(self, g):
        assert parse_graph(format_graph(g, ["seed=1"])) == g

    def test_graph_header_mismatch(self):
        with pytest.raises(ValueError, match="header"):
            parse_graph("3 2\n0 1\n")

    def test_dimacs_round_trip(self):
        f = gen_random_3sat(10, seed=2)
        text = format_dimacs(f, ["seed=2"])
        assert text.splitlines()[1] == "p cnf 10 43"
        assert parse_dimacs(text) == f

    def test_exact_cover_round_trip(self):
        e = gen_exact_cover_usa(7, 4)
        assert parse_exact_cover(format_exact_cover(e)) == e

    def test_reproducible_text(self):
        a = format_dimacs(gen_random_3sat(10, seed=5))
        b = format_dimacs(gen_random_3sat(10, seed=5))
        assert a == b and np.isclose(len(a.splitlines()), 44)
