"""Optimal differential-privacy leakage under worst-case Hamming distortion.

Three solution paths, by source-set class:

* Class I (hull contains uniform): closed form ``ln((M-1)(1-D)/D)``.
* Class II (globally ordered): exact.  For each admissible count k of
  suppressed output symbols, the best leakage over mechanisms with k
  all-zero columns is a linear-fractional program in the per-symbol
  distortions; a Charnes-Cooper substitution (normalize the denominator,
  scale everything by t = 1/D_1) turns it into an LP, and the answer is the
  minimum over k.
* Class III (everything else): upper and lower bounds obtained by folding
  every ordered piece into the sorted chamber, running the Class II program
  over the intersection (lower) or union (upper) of the folded pieces with
  the extra tying constraints ``D_{T(i)} = D_i`` for every folding
  permutation T.  Distortion constraints against those regions are generated
  lazily as cutting planes from the region oracles.

Distortion thresholds gate the suppression counts: no mechanism with k or
more all-zero columns can keep the average distortion below
``D^(k) = max_P (sum of the k smallest-probability coordinates)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .classify import (
    CapRegion,
    Classification,
    CupRegion,
    SourceClass,
    VertexHullRegion,
    classify,
    fold_array,
)
from .core import Mechanism, Permutation, SourceSet, identity_mechanism, relabel_mechanism
from .errors import DomainError, NumericalFailure
from .mechanisms import (
    collapse_mechanism,
    construct_optimal_mechanism,
    symmetric_mechanism,
    uniform_mechanism,
)
from .lp import LinearProgram, LpStatus, solve_lp, solve_with_cuts

# Regime boundaries D >= D^(k) are tested with this slack so that budgets
# assembled from float vertex data (e.g. tail sums that should be exactly
# 0.30) land in the intended branch.
REGIME_TOL = 1e-9

# A k-subproblem whose residual budget D - D^(k) is this small is reported
# as infeasible (infinite leakage); at the exact threshold the budget is 0.
MIN_BUDGET = 1e-12

VALUE_TIE_TOL = 1e-9


class BoundKind(enum.Enum):
    EXACT = "exact"
    LOWER_BOUND = "lower"
    UPPER_BOUND = "upper"


@dataclass(frozen=True)
class Thresholds:
    """Suppression thresholds ``dk[k-1] = D^(k)`` for k = 1..M; D^(0) = 0."""

    dk: np.ndarray

    def d(self, k: int) -> float:
        return 0.0 if k == 0 else float(self.dk[k - 1])

    @property
    def M(self) -> int:
        return self.dk.shape[0]


@dataclass(frozen=True)
class DpSolution:
    """A leakage value plus the optimizer metadata that certifies it.

    ``dstar`` is the ascending distortion profile of the kept symbols in
    sorted (canonical) coordinates; ``mechanism`` is expressed in the
    original labeling of the input source set.  For Class III results the
    mechanism attains the bound on the bound's defining folded region; only
    the upper bound's mechanism is guaranteed valid for the original set.
    """

    leakage: float
    kind: BoundKind
    chosen_k: Optional[int] = None
    dstar: Optional[np.ndarray] = None
    mechanism: Optional[Mechanism] = None
    cap_empty_fallback: bool = False


def _ge(a: float, b: float) -> bool:
    return a >= b - REGIME_TOL


def closed_form_leakage(M: int, D: float) -> float:
    """``ln((M-1)(1-D)/D)``, the symmetric-mechanism leakage."""
    return math.log((M - 1) * (1.0 - D) / D)


def thresholds(source) -> Thresholds:
    """Tail-sum thresholds of a sorted source set (or of a folded region).

    ``source`` is either a SourceSet whose vertices are already sorted
    descending, or a region oracle exposing ``maximize``; in the folded case
    each threshold is the region maximum of the indicator of the k last
    coordinates.
    """
    if isinstance(source, SourceSet):
        V = source.vertex_matrix
        M = source.M
        dk = np.array([V[:, M - k:].sum(axis=1).max() for k in range(1, M + 1)])
        return Thresholds(dk)
    return _thresholds_from_region(source, source_m(source))


def source_m(region) -> int:
    V = getattr(region, "V", None)
    if V is not None:
        return V.shape[1]
    return region.M


def _thresholds_from_region(region, M: int) -> Thresholds:
    dk = np.empty(M)
    for k in range(1, M + 1):
        c = np.zeros(M)
        c[M - k:] = 1.0
        res = region.maximize(c)
        if res is None:
            raise DomainError("cannot take thresholds of an empty region")
        dk[k - 1] = res[0]
    return Thresholds(dk)


def solve_class1(M: int, D: float) -> DpSolution:
    """Closed-form optimum for source sets whose hull contains uniform."""
    if M < 2:
        raise DomainError(f"alphabet size must be >= 2, got {M}")
    if D < 0.0 or D > 1.0:
        raise DomainError(f"distortion must lie in [0, 1], got {D}")
    if D == 0.0:
        return DpSolution(math.inf, BoundKind.EXACT, mechanism=identity_mechanism(M))
    if _ge(D, (M - 1) / M):
        d = np.full(M, (M - 1) / M)
        return DpSolution(0.0, BoundKind.EXACT, chosen_k=0, dstar=d,
                          mechanism=uniform_mechanism(M))
    d = np.full(M, D)
    return DpSolution(closed_form_leakage(M, D), BoundKind.EXACT, chosen_k=0,
                      dstar=d, mechanism=symmetric_mechanism(M, D))


# ---------------------------------------------------------------------------
# The per-k linear-fractional program.
# ---------------------------------------------------------------------------


def _lfp_program(region, dk_k: float, D: float, k: int, equalities, M: int,
                 cut_cache: Optional[list] = None, vertex_exact: bool = False):
    """Minimum of ``(M-1-k - sum_{i>=2} D_i) / D_1`` over valid profiles.

    Variables after the Charnes-Cooper substitution are
    ``z = (y_2, ..., y_{M-k}, t)`` with ``y_i = t * D_i`` and ``y_1 = 1``
    fixed, so ``t = 1/D_1``.  Returns ``(leakage_nats, dstar)`` with
    ``leakage = inf`` when no mechanism with k suppressed columns fits the
    budget.  ``equalities`` ties full-alphabet index pairs (i, j); indices at
    or beyond M-k stand for suppressed symbols with distortion pinned to 1.
    """
    n = M - k
    a = n - 1
    budget = D - dk_k
    if budget < MIN_BUDGET:
        return math.inf, None
    nv = n          # y_2..y_n occupy 0..n-2, t sits at n-1
    t_idx = n - 1

    def cut_from_point(point: np.ndarray):
        row = np.zeros(nv)
        row[: n - 1] = point[1:n]
        row[t_idx] -= budget
        return row, -float(point[0])

    rows, rhs = [], []
    r = np.zeros(nv)
    r[0 if n >= 2 else t_idx] = -1.0       # y_2 >= 1 (monotone above y_1 = 1)
    rows.append(r)
    rhs.append(-1.0)
    for i in range(n - 2):                 # y_{i+2} <= y_{i+3}
        r = np.zeros(nv)
        r[i], r[i + 1] = 1.0, -1.0
        rows.append(r)
        rhs.append(0.0)
    for i in range(n - 1):                 # D_i <= 1  <=>  y_i <= t
        r = np.zeros(nv)
        r[i], r[t_idx] = 1.0, -1.0
        rows.append(r)
        rhs.append(0.0)
    r = np.zeros(nv)
    r[t_idx] = -1.0                        # D_1 <= 1  <=>  t >= 1
    rows.append(r)
    rhs.append(-1.0)
    r = np.zeros(nv)                       # sum D_i <= M-1-k
    r[: n - 1] = 1.0
    r[t_idx] = -a
    rows.append(r)
    rhs.append(-1.0)

    eq_rows, eq_rhs = [], []
    for i, j in equalities:
        i, j = min(i, j), max(i, j)
        if j < n:
            r = np.zeros(nv)
            if i == 0:
                r[j - 1] = 1.0
                eq_rows.append(r)
                eq_rhs.append(1.0)
            else:
                r[i - 1], r[j - 1] = 1.0, -1.0
                eq_rows.append(r)
                eq_rhs.append(0.0)
        elif i < n:
            r = np.zeros(nv)
            if i == 0:
                r[t_idx] = 1.0             # D_1 = 1: unsatisfiable with the sum row
                eq_rows.append(r)
                eq_rhs.append(1.0)
            else:
                r[i - 1], r[t_idx] = 1.0, -1.0
                eq_rows.append(r)
                eq_rhs.append(0.0)

    seed_points = list(cut_cache) if cut_cache is not None else []
    if vertex_exact:
        seed_points = [region.V[r] for r in range(region.V.shape[0])]
    for p in seed_points:
        row, b = cut_from_point(np.asarray(p))
        rows.append(row)
        rhs.append(b)

    objective = np.full(nv, -1.0)
    objective[t_idx] = float(a)
    lp = LinearProgram(objective, a_ub=np.array(rows), b_ub=np.array(rhs),
                       a_eq=np.array(eq_rows) if eq_rows else None,
                       b_eq=np.array(eq_rhs) if eq_rhs else None)

    if vertex_exact:
        sol = solve_lp(lp)
    else:
        def separator(z):
            dvec = np.concatenate([[1.0], z[: n - 1]]) / z[t_idx]
            c = np.zeros(M)
            c[:n] = dvec
            res = region.maximize(c)
            if res is None:
                return None
            value, point = res
            if value <= budget + 1e-9:
                return None
            if cut_cache is not None:
                cut_cache.append(point)
            return cut_from_point(point)

        sol = solve_with_cuts(lp, [separator])

    if sol.status is not LpStatus.OPTIMAL:
        return math.inf, None
    z = sol.point
    t = z[t_idx]
    dstar = np.concatenate([[1.0 / t], z[: n - 1] / t])
    dstar = np.minimum(np.maximum.accumulate(np.clip(dstar, 0.0, 1.0)), 1.0)
    return max(0.0, math.log(max(sol.value, 1.0))), dstar


def solve_lfp_k(S: SourceSet, D: float, k: int, equalities=()):
    """Best leakage with exactly k suppressed columns, for a sorted Class II set.

    Returns ``(leakage, dstar)``; leakage is ``inf`` below the threshold
    ``D^(k)``.  ``equalities`` carries the Class III tying constraints as
    full-alphabet index pairs.
    """
    M = S.M
    if not 0 <= k <= M - 2:
        raise DomainError(f"k must lie in 0..{M - 2}, got {k}")
    thr = thresholds(S)
    region = VertexHullRegion(S.vertex_matrix)
    return _lfp_program(region, thr.d(k), D, k, tuple(equalities), M, vertex_exact=True)


def _trim_suppressed(value: float, dstar: np.ndarray, k: int):
    """Fold trailing distortions of 1 into the suppressed-column count.

    A profile ending in exact 1s describes a mechanism whose closing columns
    are all-zero anyway, i.e. a larger-k solution reached at the closed
    boundary of the k-subproblem; the leakage value is unchanged.
    """
    d = np.asarray(dstar)
    while d.shape[0] > 2 and d[-1] >= 1.0 - 1e-9:
        d = d[:-1]
        k += 1
    return value, d, k


def _pick_best(candidates):
    """Smallest leakage; ties (within tolerance) resolve to the smallest k."""
    best = None
    for value, dstar, k in candidates:
        if best is None or value < best[0] - VALUE_TIE_TOL:
            best = (value, dstar, k)
    return best


def _assemble_exact(value, dstar, k, M, relabel: Optional[Permutation], kind=BoundKind.EXACT,
                    fallback=False):
    value, dstar, k = _trim_suppressed(value, dstar, k)
    mech = construct_optimal_mechanism(dstar, k, M)
    if relabel is not None and not relabel.is_identity():
        mech = relabel_mechanism(mech, relabel)
    return DpSolution(value, kind, chosen_k=k, dstar=dstar, mechanism=mech,
                      cap_empty_fallback=fallback)


def solve_class2(S: SourceSet, D: float, classification: Optional[Classification] = None) -> DpSolution:
    """Exact optimal leakage for a Class II source set (any labeling).

    The set is relabeled to the identity ordering, solved there, and the
    winning mechanism is relabeled back.  Piecewise in D: symmetric closed
    form below ``D^(1)``, the minimum of the per-k fractional programs
    between thresholds, and zero from ``D^(M-1)`` on (achieved by collapsing
    every input to the most likely symbol).
    """
    cls = classification or classify(S)
    if cls.source_class is not SourceClass.CLASS_II:
        raise DomainError(f"expected a Class II source set, got Class {cls.source_class.value}")
    if D < 0.0 or D > 1.0:
        raise DomainError(f"distortion must lie in [0, 1], got {D}")
    M = S.M
    ordering = cls.ordering
    if D == 0.0:
        return DpSolution(math.inf, BoundKind.EXACT, mechanism=identity_mechanism(M))

    V = np.array([fold_array(ordering, v.probs) for v in S.vertices])
    thr = Thresholds(np.array([V[:, M - k:].sum(axis=1).max() for k in range(1, M + 1)]))

    if _ge(D, thr.d(M - 1)):
        mech = collapse_mechanism(M)
        if not ordering.is_identity():
            mech = relabel_mechanism(mech, ordering)
        return DpSolution(0.0, BoundKind.EXACT, chosen_k=M - 1, dstar=np.zeros(1),
                          mechanism=mech)
    if D < thr.d(1):
        return DpSolution(closed_form_leakage(M, D), BoundKind.EXACT, chosen_k=0,
                          dstar=np.full(M, D), mechanism=symmetric_mechanism(M, D))

    region = VertexHullRegion(V)
    k_top = max(k for k in range(1, M - 1) if _ge(D, thr.d(k)))
    candidates = []
    for l in range(0, k_top + 1):
        value, dstar = _lfp_program(region, thr.d(l), D, l, (), M, vertex_exact=True)
        if math.isfinite(value):
            candidates.append((value, dstar, l))
    if not candidates:
        raise NumericalFailure("no feasible suppression count in the middle regime")
    value, dstar, l = _pick_best(candidates)
    return _assemble_exact(value, dstar, l, M, ordering)


# ---------------------------------------------------------------------------
# Class III bounds.
# ---------------------------------------------------------------------------


def _orbit_pairs(folding, M: int):
    """Index-tying pairs induced by ``D_{T(i)} = D_i`` over the folding set."""
    parent = list(range(M))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for T in folding:
        for i in range(M):
            a, b = find(i), find(T(i))
            if a != b:
                parent[max(a, b)] = min(a, b)
    groups: dict = {}
    for i in range(M):
        groups.setdefault(find(i), []).append(i)
    pairs = []
    for members in groups.values():
        root = members[0]
        pairs.extend((root, m) for m in members[1:])
    return tuple(pairs)


class Class3Solver:
    """Caches the folded regions, thresholds, and discovered cutting planes
    of one Class III source set so a distortion sweep stays cheap."""

    def __init__(self, S: SourceSet, classification: Optional[Classification] = None):
        cls = classification or classify(S)
        if cls.source_class is not SourceClass.CLASS_III:
            raise DomainError(
                f"expected a Class III source set, got Class {cls.source_class.value}"
            )
        self.M = S.M
        folding = cls.folding_set
        # Canonicalize so the identity chamber is populated: relabel every
        # vertex by the lexicographically first folding permutation, and
        # conjugate the folding set to match.
        if any(T.is_identity() for T in folding):
            self.relabel = None
            V = S.vertex_matrix
            self.folding = tuple(sorted(folding, key=lambda T: T.one_line()))
        else:
            T1 = folding[0]
            self.relabel = T1
            V = np.array([fold_array(T1, v.probs) for v in S.vertices])
            inv = T1.inverse()
            self.folding = tuple(
                sorted((inv.compose(T) for T in folding), key=lambda T: T.one_line())
            )
        self.equalities = _orbit_pairs(self.folding, self.M)
        self.collapse_allowed = all(T(0) == 0 for T in self.folding)
        self.cap = CapRegion(V, self.folding)
        self.cup = CupRegion(V, self.folding)
        self.cap_empty = self.cap.is_empty()
        self.fallback_region = CupRegion(V, (Permutation.identity(self.M),)) if self.cap_empty else None
        self._thr: dict = {}
        self._cuts: dict = {"cap": [], "cup": [], "fallback": []}

    def _region(self, name: str):
        return {"cap": self.cap, "cup": self.cup, "fallback": self.fallback_region}[name]

    def _thresholds(self, name: str) -> Thresholds:
        if name not in self._thr:
            self._thr[name] = _thresholds_from_region(self._region(name), self.M)
        return self._thr[name]

    def _relabel_back(self, mech: Optional[Mechanism]) -> Optional[Mechanism]:
        if mech is not None and self.relabel is not None:
            return relabel_mechanism(mech, self.relabel)
        return mech

    def _evaluate(self, name: str, D: float, kind: BoundKind, *,
                  equalities, collapse_gate: bool, fallback: bool = False) -> DpSolution:
        M = self.M
        thr = self._thresholds(name)
        region = self._region(name)
        if D < thr.d(1):
            sol = DpSolution(closed_form_leakage(M, D), kind, chosen_k=0,
                             dstar=np.full(M, D), mechanism=symmetric_mechanism(M, D),
                             cap_empty_fallback=fallback)
            return sol
        if _ge(D, (M - 1) / M):
            return DpSolution(0.0, kind, chosen_k=0, dstar=np.full(M, (M - 1) / M),
                              mechanism=uniform_mechanism(M), cap_empty_fallback=fallback)
        candidates = []
        for l in range(0, M - 1):
            if l > M - 2:
                break
            value, dstar = _lfp_program(region, thr.d(l), D, l, equalities, M,
                                        cut_cache=self._cuts[name])
            if math.isfinite(value):
                candidates.append((value, dstar, l))
        if collapse_gate and _ge(D, thr.d(M - 1)):
            candidates.append((0.0, None, M - 1))
        if not candidates:
            raise NumericalFailure(f"no feasible candidate for the {name} program at D={D}")
        value, dstar, l = _pick_best(candidates)
        if dstar is None:  # the collapse candidate won
            mech = self._relabel_back(collapse_mechanism(M))
            return DpSolution(0.0, kind, chosen_k=M - 1, dstar=np.zeros(1),
                              mechanism=mech, cap_empty_fallback=fallback)
        value, dstar, l = _trim_suppressed(value, dstar, l)
        mech = self._relabel_back(construct_optimal_mechanism(dstar, l, M))
        return DpSolution(value, kind, chosen_k=l, dstar=dstar, mechanism=mech,
                          cap_empty_fallback=fallback)

    def bounds(self, D: float):
        """(lower, upper) bound solutions at distortion budget D."""
        if D <= 0.0 or D > 1.0:
            raise DomainError(f"distortion must lie in (0, 1], got {D}")
        upper = self._evaluate("cup", D, BoundKind.UPPER_BOUND,
                               equalities=self.equalities,
                               collapse_gate=self.collapse_allowed)
        if self.cap_empty:
            # The folded pieces share no common point; fall back to the plain
            # Class II optimum of (hull intersect sorted chamber), which still
            # lower-bounds the true leakage.
            lower = self._evaluate("fallback", D, BoundKind.LOWER_BOUND,
                                   equalities=(), collapse_gate=True, fallback=True)
        else:
            lower = self._evaluate("cap", D, BoundKind.LOWER_BOUND,
                                   equalities=self.equalities,
                                   collapse_gate=self.collapse_allowed)
        return lower, upper


def solve_class3_bounds(S: SourceSet, D: float,
                        classification: Optional[Classification] = None):
    """One-shot ``(lower, upper)`` bounds for a Class III source set.

    For sweeps over many D values build a :class:`Class3Solver` once and call
    its ``bounds`` method instead; the folded regions, thresholds, and
    accumulated cutting planes are then shared across the grid.
    """
    return Class3Solver(S, classification).bounds(D)
