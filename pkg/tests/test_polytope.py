from fractions import Fraction

import numpy as np
import pytest

from cyclegames.polytope import (
    CausalVertex,
    CorrelationVector,
    SizeError,
    enumerate_vertices,
    exact_affine_rank,
    facet_check,
    float_affine_rank,
    full_dimensionality,
    lhs_form,
    max_causal_win,
    raw_vertex_count,
    saturating_families,
    unit_vector_strategy,
)


class TestEnumeration:
    def test_raw_count_two_parties(self):
        assert raw_vertex_count(2) == 16

    def test_entries_are_binary(self):
        for v in enumerate_vertices(2):
            assert set(v.correlation().values) <= {0, 1}

    def test_all_zero_and_unit_vectors_present(self):
        for n in (2, 3):
            seen = {v.correlation().values for v in enumerate_vertices(n)}
            assert tuple(0 for _ in range(2 * n)) in seen
            for pos in range(2 * n):
                unit = tuple(1 if i == pos else 0 for i in range(2 * n))
                assert unit in seen

    def test_blind_row_constraint_enforced(self):
        with pytest.raises(ValueError):
            CausalVertex(2, first_party=0, responses=(((0, 0)), ((0, 1))))

    def test_size_guard(self):
        with pytest.raises(SizeError):
            enumerate_vertices(1)
        with pytest.raises(SizeError):
            enumerate_vertices(6)

    def test_dedup_keeps_distinct_correlations(self):
        vertices = enumerate_vertices(2)
        keys = [v.correlation().values for v in vertices]
        assert len(keys) == len(set(keys))


class TestMaxWin:
    @pytest.mark.parametrize("n,expect", [(2, Fraction(3, 4)), (3, Fraction(5, 6)), (4, Fraction(7, 8))])
    def test_exact_bound(self, n, expect):
        assert max_causal_win(n) == expect


class TestLhsForm:
    def test_zero_vector(self):
        vec = CorrelationVector(3, tuple(0 for _ in range(6)))
        assert lhs_form(vec) == 0

    def test_first_family_saturates(self):
        for n in (2, 3, 4):
            fam = saturating_families(n)
            assert lhs_form(fam[0]) == n - 1

    def test_second_family_saturates(self):
        for n in (2, 3, 4):
            fam = saturating_families(n)
            assert lhs_form(fam[n]) == n - 1

    def test_matches_win_probability(self):
        for v in enumerate_vertices(3):
            vec = v.correlation()
            assert v.win_probability() == Fraction(lhs_form(vec) + 3, 6)


class TestRanks:
    def test_exact_and_float_agree_random(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            pts = rng.integers(0, 2, size=(6, 5))
            assert exact_affine_rank(pts.tolist()) == float_affine_rank(pts)

    def test_rank_drop_when_removing_unit_vector(self):
        n = 2
        named = [tuple(0 for _ in range(2 * n))]
        for pos in range(2 * n):
            named.append(tuple(1 if i == pos else 0 for i in range(2 * n)))
        assert exact_affine_rank(named) == 2 * n
        assert exact_affine_rank(named[:-1]) == 2 * n - 1


class TestFullDimensionality:
    @pytest.mark.parametrize("n,rank", [(2, 4), (3, 6)])
    def test_rank(self, n, rank):
        report = full_dimensionality(n)
        assert report.full_dimensional
        assert report.affine_rank == rank


class TestFacet:
    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_confirmed(self, n):
        report = facet_check(n)
        assert report.facet, report.summary()
        assert report.family_rank == 2 * n - 1
        assert report.saturating_rank == 2 * n - 1
        assert report.polytope_rank == 2 * n

    def test_two_party_family_size(self):
        assert len(saturating_families(2)) == 4


class TestConvexity:
    def test_random_mixtures_respect_cap(self):
        rng = np.random.default_rng(11)
        for n in (2, 3):
            vertices = [np.array(v.correlation().values, dtype=float) for v in enumerate_vertices(n)]
            for _ in range(500):
                picks = rng.integers(0, len(vertices), size=4)
                weights = rng.dirichlet(np.ones(4))
                mix = sum(w * vertices[p] for w, p in zip(weights, picks))
                vec = CorrelationVector(n, tuple(mix))
                assert lhs_form(vec) <= n - 1 + 1e-12


class TestUnitVectorStrategy:
    def test_reproduces_unit_vector(self):
        for n in (2, 3):
            for s0 in range(n):
                for x0 in (0, 1):
                    vertex = unit_vector_strategy(n, s0, x0)
                    expect = tuple(
                        1 if (x * n + s) == (x0 * n + s0) else 0
                        for x in (0, 1)
                        for s in range(n)
                    )
                    assert vertex.correlation().values == expect
