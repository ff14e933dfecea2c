"""Source-set classification and folding-permutation machinery.

A source set falls into one of three classes: its hull contains the uniform
distribution (Class I), a single permutation sorts every member's
probabilities non-strictly (Class II), or neither (Class III).  Class III
sets are unions of ordered pieces: each chamber of the simplex
``{P : P[T(0)] >= ... >= P[T(M-1)]}`` that meets the hull contributes a
folding permutation T, and "folding" a piece means relabeling it into the
canonical sorted chamber S0.

The intersection and union of the folded pieces are never materialized as
vertex lists; they are exposed as linear-functional maximization oracles
backed by LPs over convex-combination weights, which is all the downstream
solvers need.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .core import Permutation, SourceSet, sort_permutation
from .errors import SearchBudgetExceeded
from .lp import LinearProgram, LpStatus, feasible, solve_lp

ORDER_TIE_TOL = 1e-12


class SourceClass(enum.Enum):
    CLASS_I = "I"
    CLASS_II = "II"
    CLASS_III = "III"


@dataclass(frozen=True)
class Classification:
    source_class: SourceClass
    ordering: Optional[Permutation] = None            # Class II only
    folding_set: Optional[tuple] = None               # Class III only
    cap_nonempty: Optional[bool] = None               # Class III only


def fold_array(T: Permutation, values: np.ndarray) -> np.ndarray:
    """Coordinates of ``values`` read out in the order T: result[j] = values[T(j)].

    For a point in T's chamber the result is sorted descending.
    """
    return np.asarray(values)[T.mapping]


def unfold_array(T: Permutation, values: np.ndarray) -> np.ndarray:
    """Inverse of :func:`fold_array`: result[T(j)] = values[j]."""
    out = np.empty_like(np.asarray(values, dtype=float))
    out[T.mapping] = values
    return out


def contains_uniform(S: SourceSet) -> bool:
    """LP membership test: is the uniform distribution in the hull?"""
    V = S.vertex_matrix
    n, M = V.shape
    a_eq = np.vstack([V.T, np.ones((1, n))])
    b_eq = np.concatenate([np.full(M, 1.0 / M), [1.0]])
    return feasible(LinearProgram(np.zeros(n), a_eq=a_eq, b_eq=b_eq))


def _common_ordering(V: np.ndarray) -> Optional[Permutation]:
    """The lexicographically smallest permutation sorting every row of V.

    Greedy: repeatedly take the smallest remaining index whose coordinate
    dominates (non-strictly, in every vertex) all other remaining ones.
    Ties therefore resolve toward the identity.
    """
    M = V.shape[1]
    remaining = list(range(M))
    order = []
    while remaining:
        pick = None
        for a in remaining:
            if all(
                np.all(V[:, a] >= V[:, b] - ORDER_TIE_TOL)
                for b in remaining
                if b != a
            ):
                pick = a
                break
        if pick is None:
            return None
        order.append(pick)
        remaining.remove(pick)
    return Permutation(np.array(order))


def _chamber_lp(V: np.ndarray, seq: tuple) -> LinearProgram:
    """Feasibility program for hull-meets-chamber, in vertex-weight space."""
    n = V.shape[0]
    rows = []
    for j in range(len(seq) - 1):
        rows.append(V[:, seq[j + 1]] - V[:, seq[j]])  # <= 0
    a_ub = np.array(rows)
    b_ub = np.zeros(len(rows))
    a_eq = np.ones((1, n))
    return LinearProgram(np.zeros(n), a_ub=a_ub, b_ub=b_ub, a_eq=a_eq, b_eq=[1.0])


def find_folding_permutations(S: SourceSet) -> list:
    """All permutations whose chamber meets the hull.

    Seeded with each vertex's sort permutation, then breadth-first expanded
    by adjacent transpositions of the rank sequence; a convex set meets a
    facet-connected family of chambers and facet adjacency is exactly an
    adjacent transposition, so the frontier search is exhaustive.
    """
    V = S.vertex_matrix
    M = S.M
    budget = 10 * math.factorial(M)
    tested = 0

    seeds = {sort_permutation(v.probs).one_line() for v in S.vertices}
    feasible_set: set = set()
    seen: set = set()
    queue: deque = deque()
    for s in sorted(seeds):
        seen.add(s)
        queue.append(s)
    while queue:
        seq = queue.popleft()
        tested += 1
        if tested > budget:
            raise SearchBudgetExceeded(f"tested more than {budget} chambers")
        if not feasible(_chamber_lp(V, seq)):
            continue
        feasible_set.add(seq)
        for j in range(M - 1):
            nxt = list(seq)
            nxt[j], nxt[j + 1] = nxt[j + 1], nxt[j]
            nxt = tuple(nxt)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return [Permutation(np.array(seq)) for seq in sorted(feasible_set)]


def classify(S: SourceSet) -> Classification:
    """Decide Class I / II / III and attach the class-specific data."""
    if contains_uniform(S):
        return Classification(SourceClass.CLASS_I)
    ordering = _common_ordering(S.vertex_matrix)
    if ordering is not None:
        return Classification(SourceClass.CLASS_II, ordering=ordering)
    folding = tuple(find_folding_permutations(S))
    cap = CapRegion(S.vertex_matrix, folding)
    return Classification(
        SourceClass.CLASS_III,
        folding_set=folding,
        cap_nonempty=not cap.is_empty(),
    )


# ---------------------------------------------------------------------------
# Linear-functional maximization oracles over folded regions.
#
# Every region lives inside the sorted chamber S0; ``maximize(c)`` returns
# ``(value, argmax point)`` or ``None`` when the region is empty.  These are
# the only surfaces the solvers use (distortion cuts and tail thresholds),
# so no vertex enumeration of the folded polytopes is ever needed.
#
# Folding sets blow up when vertices carry tied coordinates: every tie adds
# boundary chambers whose pieces are faces of neighboring pieces, and whose
# folded images nest inside the neighbors' images.  Nested pieces are
# redundant: the union needs only inclusion-maximal pieces and the
# intersection only inclusion-minimal ones, so both regions prune them away
# (exactly) before building their LPs.
# ---------------------------------------------------------------------------


def _prune_nested_pieces(folding: tuple, V: np.ndarray, keep_minimal: bool) -> tuple:
    """Drop folding permutations whose folded piece nests inside (or around)
    a neighbor's.

    When coordinate a dominates coordinate b on every vertex, the chamber
    ranking b above a pins ``P_a = P_b``: its piece is a face of the chamber
    ranking a above b, and both fold to the same image there.  The larger
    piece is redundant for intersections, the smaller one for unions; fully
    tied pairs keep the lexicographically smaller sequence.
    """
    members = {T.one_line() for T in folding}

    def dominates(a: int, b: int) -> bool:
        return bool(np.all(V[:, a] >= V[:, b] - ORDER_TIE_TOL))

    kept = []
    for T in folding:
        seq = T.one_line()
        drop = False
        for j in range(len(seq) - 1):
            x, y = seq[j], seq[j + 1]
            swapped = list(seq)
            swapped[j], swapped[j + 1] = y, x
            if tuple(swapped) not in members:
                continue
            dom_xy, dom_yx = dominates(x, y), dominates(y, x)
            if dom_xy and dom_yx:
                if seq > tuple(swapped):  # identical pieces: keep one
                    drop = True
                    break
            elif keep_minimal and dom_xy:
                drop = True  # vacuous constraint: this is the larger piece
                break
            elif not keep_minimal and dom_yx:
                drop = True  # tie-face piece: contained in the swapped one
                break
        if not drop:
            kept.append(T)
    return tuple(kept)


class VertexHullRegion:
    """The hull itself (already sorted for Class II use): max over vertices."""

    def __init__(self, vertices: np.ndarray):
        self.V = np.asarray(vertices, dtype=float)

    def is_empty(self) -> bool:
        return False

    def maximize(self, c: np.ndarray):
        vals = self.V @ np.asarray(c, dtype=float)
        best = int(np.argmax(vals))
        return float(vals[best]), self.V[best]


class CupRegion:
    """Union of the folded pieces: one chamber-restricted LP per permutation."""

    def __init__(self, vertices: np.ndarray, folding: tuple):
        self.V = np.asarray(vertices, dtype=float)
        self.folding = _prune_nested_pieces(tuple(folding), self.V, keep_minimal=False)
        self._lps = [_chamber_lp(self.V, T.one_line()) for T in self.folding]

    def is_empty(self) -> bool:
        return False  # every folding permutation has a nonempty piece

    def maximize(self, c: np.ndarray):
        c = np.asarray(c, dtype=float)
        best = None
        for T, base in zip(self.folding, self._lps):
            # c . fold_T(P) with P = sum_r w_r V_r
            obj = -self.V[:, T.mapping] @ c
            sol = solve_lp(
                LinearProgram(obj, a_ub=base.a_ub, b_ub=base.b_ub,
                              a_eq=base.a_eq, b_eq=base.b_eq)
            )
            if sol.status is not LpStatus.OPTIMAL:
                continue
            value = -sol.value
            if best is None or value > best[0] + 1e-15:
                point = fold_array(T, sol.point @ self.V)
                best = (value, point)
        return best


class CapRegion:
    """Intersection of the folded pieces: a single LP with one weight block per permutation."""

    def __init__(self, vertices: np.ndarray, folding: tuple):
        V = np.asarray(vertices, dtype=float)
        folding = _prune_nested_pieces(tuple(folding), V, keep_minimal=True)
        n, M = V.shape
        k = len(folding)
        self.M = M
        nvars = M + k * n  # P-bar coordinates, then one weight block per T

        eq_rows, eq_rhs = [], []
        for t, T in enumerate(folding):
            w0 = M + t * n
            for j in range(M):
                row = np.zeros(nvars)
                row[w0:w0 + n] = V[:, T(j)]
                row[j] = -1.0
                eq_rows.append(row)
                eq_rhs.append(0.0)
            row = np.zeros(nvars)
            row[w0:w0 + n] = 1.0
            eq_rows.append(row)
            eq_rhs.append(1.0)

        ub_rows = np.zeros((M - 1, nvars))
        for j in range(M - 1):
            ub_rows[j, j + 1] = 1.0
            ub_rows[j, j] = -1.0

        upper = np.concatenate([np.ones(M), np.full(k * n, np.inf)])
        self._base = LinearProgram(
            np.zeros(nvars),
            a_ub=ub_rows,
            b_ub=np.zeros(M - 1),
            a_eq=np.array(eq_rows),
            b_eq=np.array(eq_rhs),
            upper=upper,
        )
        self._nvars = nvars
        self._empty: Optional[bool] = None

    def is_empty(self) -> bool:
        if self._empty is None:
            self._empty = not feasible(self._base)
        return self._empty

    def maximize(self, c: np.ndarray):
        if self.is_empty():
            return None
        obj = np.zeros(self._nvars)
        obj[: self.M] = -np.asarray(c, dtype=float)
        b = self._base
        sol = solve_lp(LinearProgram(obj, a_ub=b.a_ub, b_ub=b.b_ub,
                                     a_eq=b.a_eq, b_eq=b.b_eq, upper=b.upper))
        if sol.status is not LpStatus.OPTIMAL:
            return None
        return -sol.value, sol.point[: self.M]


class CapCupOracles(NamedTuple):
    max_over_cap: Callable
    max_over_cup: Callable


def cap_cup_oracles(S: SourceSet, folding) -> CapCupOracles:
    """Value-only maximization oracles for the folded intersection and union.

    Each callable maps a linear functional c to ``max c . P`` over its
    region, or to ``None`` when the region is empty (only the intersection
    can be).
    """
    cap = CapRegion(S.vertex_matrix, tuple(folding))
    cup = CupRegion(S.vertex_matrix, tuple(folding))

    def max_over_cap(c):
        res = cap.maximize(c)
        return None if res is None else res[0]

    def max_over_cup(c):
        res = cup.maximize(c)
        return None if res is None else res[0]

    return CapCupOracles(max_over_cap, max_over_cup)
