"""Causal correlations for the n-party cycle game, and the facet certificate.

A deterministic causal strategy fixes which party acts first; when that
party happens to be the guesser, its output cannot depend on the hidden
bit.  Enumerating those strategies gives the vertices of the causal
polytope in the coordinates p(0|s,x).  The winning probability over the
vertices is capped at 1 - 1/(2n), exactly, and the cap is a facet: 2n
affinely independent vertices saturate it.

Ranks are computed twice, once exactly over rationals (all vertex
coordinates are 0/1) and once with floating point, and must agree.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class SizeError(ValueError):
    """Party count outside the supported enumeration range."""


def _check_n(n: int) -> None:
    if not 2 <= n <= 5:
        raise SizeError(f"supported party range is 2 <= n <= 5, got {n}")


@dataclass(frozen=True)
class CorrelationVector:
    """The 2n numbers p(0|s,x), stored as (x=0 half, x=1 half)."""

    n: int
    values: tuple

    def __post_init__(self):
        if len(self.values) != 2 * self.n:
            raise ValueError(f"need {2 * self.n} entries, got {len(self.values)}")
        for v in self.values:
            # float-noise margin for entries assembled from mixtures
            if not -1e-9 <= v <= 1 + 1e-9:
                raise ValueError(f"entry {v} outside [0, 1]")

    def p0(self, s: int, x: int):
        return self.values[x * self.n + s]


@dataclass(frozen=True)
class CausalVertex:
    """Deterministic strategy: first party j, guesses a(s, x).

    responses[s] = (a(s,0), a(s,1)); the row for the slot whose guesser is
    the first party is forced constant.
    """

    n: int
    first_party: int
    responses: tuple

    def __post_init__(self):
        s_blind = (self.first_party - 1) % self.n
        a0, a1 = self.responses[s_blind]
        if a0 != a1:
            raise ValueError(
                "the first party's guess row must be constant in x "
                f"(slot {s_blind}: {self.responses[s_blind]})"
            )

    def correlation(self) -> CorrelationVector:
        values = tuple(
            1 if self.responses[s][x] == 0 else 0
            for x in (0, 1)
            for s in range(self.n)
        )
        return CorrelationVector(self.n, values)

    def win_probability(self) -> Fraction:
        wins = sum(
            1 for s in range(self.n) for x in (0, 1) if self.responses[s][x] == x
        )
        return Fraction(wins, 2 * self.n)


def enumerate_vertices(n: int) -> list:
    """All deterministic causal vertices, deduplicated by correlation.

    Raw count is n * 2 * 4^(n-1): a first party, one constant guess for the
    blind slot, and free guesses elsewhere.
    """
    _check_n(n)
    vertices = []
    seen = set()
    for j in range(n):
        s_blind = (j - 1) % n
        free_slots = [s for s in range(n) if s != s_blind]
        for fixed in (0, 1):
            for combo in itertools.product(
                itertools.product((0, 1), repeat=2), repeat=n - 1
            ):
                responses = [None] * n
                responses[s_blind] = (fixed, fixed)
                for slot, pair in zip(free_slots, combo):
                    responses[slot] = pair
                vertex = CausalVertex(n, j, tuple(responses))
                key = vertex.correlation().values
                if key not in seen:
                    seen.add(key)
                    vertices.append(vertex)
    return vertices


def raw_vertex_count(n: int) -> int:
    return n * 2 * 4 ** (n - 1)


def max_causal_win(n: int) -> Fraction:
    """Exact maximum of the winning probability over all causal vertices."""
    return max(v.win_probability() for v in enumerate_vertices(n))


def lhs_form(vec: CorrelationVector):
    """sum_{s,x} (-1)^x p(0|s,x); the causal cap is n - 1.

    Through p_win = (lhs + n) / (2n) this is the same inequality as the
    winning-probability bound.
    """
    return sum(vec.p0(s, 0) - vec.p0(s, 1) for s in range(vec.n))


def exact_affine_rank(points) -> int:
    """Affine rank over exact rationals via Gaussian elimination."""
    points = [tuple(Fraction(v) for v in p) for p in points]
    if len(points) <= 1:
        return 0
    base = points[0]
    rows = [
        [v - b for v, b in zip(p, base)]
        for p in points[1:]
    ]
    n_cols = len(base)
    rank = 0
    for col in range(n_cols):
        pivot = None
        for r in range(rank, len(rows)):
            if rows[r][col] != 0:
                pivot = r
                break
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        lead = rows[rank][col]
        for r in range(rank + 1, len(rows)):
            if rows[r][col] != 0:
                factor = rows[r][col] / lead
                rows[r] = [a - factor * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
        if rank == len(rows):
            break
    return rank


def float_affine_rank(points) -> int:
    arr = np.asarray(points, dtype=float)
    if arr.shape[0] <= 1:
        return 0
    return int(np.linalg.matrix_rank(arr[1:] - arr[0]))


def _affine_rank_checked(points) -> int:
    exact = exact_affine_rank(points)
    approx = float_affine_rank(points)
    if exact != approx:
        raise ArithmeticError(
            f"exact affine rank {exact} disagrees with float rank {approx}"
        )
    return exact


def saturating_families(n: int) -> list:
    """The two explicit families of saturating correlation vectors.

    Family one: all-ones on the x=0 half and a single one at slot c on the
    x=1 half.  Family two: all-ones except slot c on the x=0 half and zeros
    on the x=1 half.
    """
    vectors = []
    for c in range(n):
        first = tuple(1 for _ in range(n)) + tuple(
            1 if s == c else 0 for s in range(n)
        )
        vectors.append(CorrelationVector(n, first))
    for c in range(n):
        second = tuple(0 if s == c else 1 for s in range(n)) + tuple(
            0 for _ in range(n)
        )
        vectors.append(CorrelationVector(n, second))
    return vectors


@dataclass(frozen=True)
class DimensionReport:
    n: int
    named_points_present: bool
    affine_rank: int
    full_dimensional: bool

    def summary(self) -> str:
        status = "PASS" if self.full_dimensional else "FAIL"
        return (
            f"full-dimensionality[n={self.n}]: {status} "
            f"(affine rank {self.affine_rank}, expected {2 * self.n})"
        )


def full_dimensionality(n: int) -> DimensionReport:
    """Verify the all-zero vector and every unit vector are vertices and
    affinely independent, so the polytope has affine rank 2n."""
    _check_n(n)
    vertex_set = {v.correlation().values for v in enumerate_vertices(n)}
    named = [tuple(0 for _ in range(2 * n))]
    for pos in range(2 * n):
        named.append(tuple(1 if i == pos else 0 for i in range(2 * n)))
    present = all(p in vertex_set for p in named)
    rank = _affine_rank_checked(named)
    return DimensionReport(
        n=n,
        named_points_present=present,
        affine_rank=rank,
        full_dimensional=present and rank == 2 * n,
    )


@dataclass(frozen=True)
class FacetReport:
    n: int
    family_realized: bool
    family_saturates: bool
    family_rank: int
    saturating_rank: int
    polytope_rank: int
    facet: bool

    def summary(self) -> str:
        status = "CONFIRMED" if self.facet else "NOT CONFIRMED"
        return (
            f"facet[n={self.n}]: saturating affine rank {self.saturating_rank} "
            f"= 2n-1: {status}"
        )


def facet_check(n: int) -> FacetReport:
    """Certify the cap lhs <= n-1 is a facet of the causal polytope.

    The named families must be realized by enumerated vertices, saturate
    the cap exactly, and span an affine space of dimension 2n-2 (rank
    2n-1); the same rank must come out of the set of all saturating
    vertices.
    """
    _check_n(n)
    vertices = enumerate_vertices(n)
    vertex_set = {v.correlation().values for v in vertices}
    family = saturating_families(n)
    realized = all(vec.values in vertex_set for vec in family)
    saturates = all(lhs_form(vec) == n - 1 for vec in family)
    family_rank = _affine_rank_checked([vec.values for vec in family])
    all_saturating = [
        v.correlation().values
        for v in vertices
        if lhs_form(v.correlation()) == n - 1
    ]
    saturating_rank = _affine_rank_checked(all_saturating)
    polytope_rank = _affine_rank_checked([v.correlation().values for v in vertices])
    return FacetReport(
        n=n,
        family_realized=realized,
        family_saturates=saturates,
        family_rank=family_rank,
        saturating_rank=saturating_rank,
        polytope_rank=polytope_rank,
        facet=(
            realized
            and saturates
            and family_rank == 2 * n - 1
            and saturating_rank == 2 * n - 1
            and polytope_rank == 2 * n
        ),
    )


def unit_vector_strategy(n: int, s0: int, x0: int) -> CausalVertex:
    """The vertex realizing the unit correlation vector at coordinate
    (s0, x0): guess 0 exactly when the announced pair matches."""
    responses = []
    for s in range(n):
        responses.append(
            tuple(0 if (s == s0 and x == x0) else 1 for x in (0, 1))
        )
    return CausalVertex(n, first_party=s0, responses=tuple(responses))
