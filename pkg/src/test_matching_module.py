"""Tests for permanents, matching enumeration, surplus and the matching bounds."""

import itertools

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from src.hypergraph_module import Hypergraph, VertexTriple, all_triples, random_hypergraph, relabel
from src.matching_module import (
    MatrixSizeError,
    bound_gap,
    bregman_minc,
    bregman_minc_floor,
    enumerate_perfect_matchings,
    hall_criterion,
    hall_violator,
    matching_bound,
    matching_edges,
    min_matching_bound,
    permanent,
    reduced_matrix,
    surplus,
    uniform_bounds,
)

FIGURE_MATRIX = [[1, 0, 0], [0, 1, 1], [1, 1, 1]]


def brute_permanent(a) -> int:
    a = np.asarray(a)
    k = a.shape[0]
    return sum(int(np.prod([a[i, p[i]] for i in range(k)])) for p in itertools.permutations(range(k)))


square_01 = st.integers(min_value=1, max_value=6).flatmap(
    lambda k: st.lists(st.lists(st.integers(0, 1), min_size=k, max_size=k), min_size=k, max_size=k)
)


class TestPermanent:

    def test_figure_matrix(self):
        assert permanent(FIGURE_MATRIX) == 2

    def test_empty_matrix(self):
        assert permanent(np.zeros((0, 0), dtype=int)) == 1

    def test_all_ones(self):
        assert permanent(np.ones((3, 3), dtype=int)) == 6
        assert permanent(np.ones((8, 8), dtype=int)) == 40320

    def test_identity(self):
        assert permanent(np.eye(5, dtype=int)) == 1

    def test_zero_row(self):
        assert permanent([[1, 1], [0, 0]]) == 0

    def test_not_square(self):
        with pytest.raises(MatrixSizeError, match="square"):
            permanent([[1, 0, 1]])

    def test_size_guard(self):
        with pytest.raises(MatrixSizeError, match="guard"):
            permanent(np.ones((31, 31), dtype=int))

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError, match="0/1"):
            permanent([[2, 0], [0, 1]])

    @settings(max_examples=60, deadline=None)
    @given(square_01)
    def test_matches_brute_force(self, rows):
        assert permanent(rows) == brute_permanent(rows)

    @settings(max_examples=40, deadline=None)
    @given(square_01, st.randoms(use_true_random=False))
    def test_invariant_under_permutations(self, rows, rnd):
        a = np.array(rows)
        row_perm = list(range(a.shape[0]))
        col_perm = list(range(a.shape[1]))
        rnd.shuffle(row_perm)
        rnd.shuffle(col_perm)
        assert permanent(a[row_perm][:, col_perm]) == permanent(a)
        assert permanent(a.T) == permanent(a)

    @settings(max_examples=60, deadline=None)
    @given(square_01, st.data())
    def test_monotone_in_entries(self, rows, data):
        a = np.array(rows)
        zeros = list(zip(*np.nonzero(a == 0)))
        assume(zeros)
        i, j = data.draw(st.sampled_from(zeros))
        raised = a.copy()
        raised[i, j] = 1
        assert permanent(raised) >= permanent(a)


class TestEnumeration:

    def test_figure_matchings(self):
        assert enumerate_perfect_matchings(FIGURE_MATRIX) == [(1, 2, 3), (1, 3, 2)]

    def test_matching_edges_use_vertex_labels(self, two_solutions):
        t = VertexTriple.of(1, 2, 3)
        labelled = [matching_edges(two_solutions, t, m)
                    for m in enumerate_perfect_matchings(reduced_matrix(two_solutions, t))]
        assert labelled == [[(0, 4), (1, 5), (2, 6)], [(0, 4), (1, 6), (2, 5)]]

    def test_identity_and_zero(self):
        assert enumerate_perfect_matchings(np.eye(4, dtype=int)) == [(1, 2, 3, 4)]
        assert enumerate_perfect_matchings([[1, 1], [0, 0]]) == []

    def test_size_guard(self):
        with pytest.raises(MatrixSizeError, match="guard"):
            enumerate_perfect_matchings(np.ones((13, 13), dtype=int))

    @settings(max_examples=40, deadline=None)
    @given(square_01)
    def test_count_equals_permanent(self, rows):
        matchings = enumerate_perfect_matchings(rows)
        assert len(matchings) == permanent(rows)
        assert matchings == sorted(set(matchings))


class TestBounds:

    def test_two_solutions_every_triple(self, two_solutions):
        for t in all_triples(6):
            assert matching_bound(two_solutions, t) == 2

    def test_two_solutions_report(self, two_solutions):
        report = min_matching_bound(two_solutions)
        assert report.min_bound == 2
        assert len(report.argmin_triples) == 20
        assert report.surplus == 3
        assert report.hall_criterion

    def test_duplicate_edge_gap_witness(self, duplicate_edge):
        assert matching_bound(duplicate_edge, VertexTriple.of(3, 4, 5)) == 2
        assert matching_bound(duplicate_edge, VertexTriple.of(1, 2, 3)) == 0

    def test_duplicate_edge_report(self, duplicate_edge):
        report = min_matching_bound(duplicate_edge)
        assert report.min_bound == 0
        assert report.surplus == 2
        assert report.per_triple[VertexTriple.of(3, 4, 5)] == 2
        assert not report.hall_criterion

    def test_single_edge(self, single_edge):
        assert matching_bound(single_edge, VertexTriple.of(1, 2, 3)) == 1
        assert matching_bound(single_edge, VertexTriple.of(2, 3, 4)) == 1

    def test_unbalanced(self):
        h = Hypergraph(n=6, edges=((1, 2, 3, 4),))
        with pytest.raises(MatrixSizeError, match="unbalanced"):
            matching_bound(h, VertexTriple.of(1, 2, 3))

    def test_report_to_dict(self, two_solutions):
        data = min_matching_bound(two_solutions).to_dict()
        assert data["min_bound"] == 2
        assert data["per_triple"]["1,2,3"] == 2
        assert data["argmin_triples"][0] == [1, 2, 3]

    def test_bregman_minc(self, two_solutions):
        value = bregman_minc(two_solutions, VertexTriple.of(1, 2, 3))
        assert value == pytest.approx(2.5698, abs=1e-3)
        assert bregman_minc_floor(value) >= matching_bound(two_solutions, VertexTriple.of(1, 2, 3))

    def test_bregman_minc_unit_rows(self, single_edge):
        assert bregman_minc(single_edge, VertexTriple.of(1, 2, 3)) == 1.0
        h = Hypergraph(n=5, edges=((1, 2, 3, 4), (1, 2, 3, 5)))
        assert bregman_minc(h, VertexTriple.of(1, 2, 3)) == 1.0

    def test_bregman_minc_floor_is_exact_on_integers(self, duplicate_edge):
        value = bregman_minc(duplicate_edge, VertexTriple.of(3, 4, 5))
        assert bregman_minc_floor(value) == 2

    def test_uniform_bounds(self):
        u24, pow2 = uniform_bounds(4)
        assert u24 == pytest.approx(2.21336, abs=1e-4)
        assert pow2 == 1
        assert uniform_bounds(10)[1] == 64

    def test_bregman_minc_bounds_every_triple(self):
        for seed in range(10):
            h = random_hypergraph(8, 700 + seed)
            for t in all_triples(h.n):
                assert matching_bound(h, t) <= bregman_minc_floor(bregman_minc(h, t))

    def test_min_bound_under_reversal(self):
        for seed in range(10):
            h = random_hypergraph(8, 800 + seed)
            reversed_h = relabel(h, list(range(h.n, 0, -1)))
            assert min_matching_bound(reversed_h).min_bound == min_matching_bound(h).min_bound

    @pytest.mark.parametrize("degree, bound, flag", [(2, 2, "TIGHT"), (0, 2, "GAP 2"), (1, 4, "GAP 3")])
    def test_bound_gap(self, degree, bound, flag):
        assert bound_gap(degree, bound) == flag


class TestSurplus:

    def test_two_solutions(self, two_solutions):
        assert surplus(two_solutions) == 3
        assert hall_criterion(two_solutions)
        assert hall_violator(two_solutions) is None

    def test_duplicate_edge(self, duplicate_edge):
        assert surplus(duplicate_edge) == 2
        assert not hall_criterion(duplicate_edge)

    def test_violator_kills_every_matching(self, duplicate_edge):
        subset, t = hall_violator(duplicate_edge)
        assert subset == (0, 1)
        assert t == VertexTriple.of(1, 2, 3)
        assert matching_bound(duplicate_edge, t) == 0

    def test_no_edges(self):
        with pytest.raises(ValueError, match="empty"):
            surplus(Hypergraph(n=3, edges=()))

    def test_surplus_criterion_on_random_instances(self):
        # positive minimized bound exactly when the surplus is 3
        for seed in range(300):
            n = 7 + seed % 3
            h = random_hypergraph(n, seed)
            report = min_matching_bound(h)
            assert (report.min_bound > 0) == (surplus(h) == 3)
            violator = hall_violator(h)
            if violator is not None:
                assert matching_bound(h, violator[1]) == 0

    def test_invariant_under_relabel(self):
        rng = np.random.default_rng(5)
        for seed in range(20):
            h = random_hypergraph(8, 900 + seed)
            perm = (rng.permutation(h.n) + 1).tolist()
            assert surplus(relabel(h, perm)) == surplus(h)
