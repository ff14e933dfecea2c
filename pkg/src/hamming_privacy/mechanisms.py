"""Mechanism-level computations: privacy evaluation, validity, constructions.

The privacy level of a mechanism is the smallest eps such that every pair of
rows is within a factor e^eps columnwise.  A column mixing zero and non-zero
entries admits no finite eps; an all-zero column never constrains eps (the
corresponding output symbol is simply suppressed).  Suppressed columns are
what lets optimal mechanisms shrink the output support as the distortion
budget grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Distribution, Mechanism, SourceSet, expected_distortion, mechanism
from .errors import DimensionMismatch, DomainError

# Entries below this are treated as exact zeros before ratio computation, so
# eps never comes from a ratio against a denormal.
ZERO_TOL = 1e-15

VALIDITY_TOL = 1e-9


@dataclass(frozen=True)
class ValidityReport:
    """Outcome of a distortion-budget check over a source set."""

    valid: bool
    worst_vertex: int
    worst_distortion: float


def eps_dp(Q: Mechanism) -> float:
    """Exact differential-privacy level of Q in nats (``math.inf`` if none).

    Column by column: all-zero columns contribute nothing, mixed zero/non-zero
    columns force infinity, and fully positive columns contribute
    ``ln(max entry / min entry)``.  The result is the largest contribution,
    always >= 0.
    """
    rows = Q.rows
    worst = 0.0
    for j in range(Q.M):
        col = rows[:, j]
        nonzero = col > ZERO_TOL
        if not nonzero.any():
            continue
        if not nonzero.all():
            return math.inf
        worst = max(worst, math.log(float(col.max()) / float(col.min())))
    return worst


def is_valid(Q: Mechanism, S: SourceSet, D: float) -> ValidityReport:
    """Check whether Q keeps average distortion <= D for every P in the hull.

    Distortion is linear in P, so the maximum over the hull is attained at a
    vertex; only vertices are inspected.
    """
    if Q.M != S.M:
        raise DimensionMismatch(f"mechanism size {Q.M} != source set size {S.M}")
    if not 0.0 <= D <= 1.0:
        raise DomainError(f"distortion budget must lie in [0, 1], got {D}")
    dists = [expected_distortion(v, Q) for v in S.vertices]
    worst = int(np.argmax(dists))
    worst_distortion = float(dists[worst])
    return ValidityReport(worst_distortion <= D + VALIDITY_TOL, worst, worst_distortion)


def symmetric_mechanism(M: int, D: float) -> Mechanism:
    """The symmetric mechanism: diagonal 1-D, off-diagonal D/(M-1).

    Its privacy level is ``ln((M-1)(1-D)/D)`` for 0 < D < (M-1)/M.
    """
    if not 0.0 <= D <= 1.0:
        raise DomainError(f"distortion must lie in [0, 1], got {D}")
    if M < 2:
        raise DomainError(f"alphabet size must be >= 2, got {M}")
    rows = np.full((M, M), D / (M - 1))
    np.fill_diagonal(rows, 1.0 - D)
    return mechanism(rows)


def uniform_mechanism(M: int) -> Mechanism:
    """All entries 1/M; zero leakage at distortion exactly (M-1)/M."""
    return mechanism(np.full((M, M), 1.0 / M))


def collapse_mechanism(M: int) -> Mechanism:
    """Map every input to symbol 0: zero leakage, distortion 1 - P_0."""
    rows = np.zeros((M, M))
    rows[:, 0] = 1.0
    return mechanism(rows)


def construct_optimal_mechanism(dstar, k: int, M: int) -> Mechanism:
    """Build the leakage-minimizing mechanism for a distortion profile.

    ``dstar`` holds the ascending per-symbol distortions of the M-k kept
    symbols; the last k output symbols are suppressed (all-zero columns) and
    the suppressed rows repeat row M-k-1.  Within the kept block the
    off-diagonal mass of row i is spread proportionally to the other kept
    symbols' diagonal weights::

        Q(j|i) = dstar_i * (1 - dstar_j) / sum_{l != i} (1 - dstar_l)

    The resulting privacy level is
    ``ln((M-1-k) * (1 - sum_{i>=2} dstar_i/(M-1-k)) / dstar_1)``.

    For ``k = M-1`` the construction degenerates to mapping every input to
    symbol 0, which has zero leakage regardless of the supplied profile.
    """
    d = np.atleast_1d(np.asarray(dstar, dtype=float))
    if not 0 <= k <= M - 1:
        raise DomainError(f"k must lie in 0..{M - 1}, got {k}")
    if d.shape[0] != M - k:
        raise DomainError(f"expected {M - k} distortions for k={k}, got {d.shape[0]}")
    if np.any(d < -1e-12) or np.any(d > 1.0 + 1e-12):
        raise DomainError(f"distortions outside [0, 1]: {d}")
    if k == M - 1:
        return collapse_mechanism(M)
    if np.any(np.diff(d) < -1e-9):
        raise DomainError(f"distortions must be ascending: {d}")
    if d[0] <= 0.0:
        raise DomainError("smallest distortion must be positive (leakage would be infinite)")
    if d.sum() > M - 1 - k + 1e-9:
        raise DomainError(f"distortion sum {d.sum()} exceeds {M - 1 - k}")

    n = M - k
    keep = 1.0 - d
    denom = keep.sum() - keep  # denom[i] = sum_{l != i} (1 - dstar_l)
    rows = np.zeros((M, M))
    block = (d[:, None] * keep[None, :]) / denom[:, None]
    block[np.arange(n), np.arange(n)] = keep
    rows[:n, :n] = block
    rows[n:, :n] = block[n - 1]
    return mechanism(rows)


def is_staircase(Q: Mechanism, tol: float = 1e-9) -> bool:
    """True when some constant c covers every within-column ratio.

    A mechanism has the staircase property when the ratio of any two non-zero
    entries sharing a column lies in {1, c, 1/c}.  Equivalently each column
    carries at most two distinct non-zero levels and the high/low ratio is
    shared across columns.
    """
    ratios = []
    for j in range(Q.M):
        col = Q.rows[:, j]
        vals = np.sort(col[col > ZERO_TOL])
        if vals.size == 0:
            continue
        levels = [vals[0]]
        for v in vals[1:]:
            if v / levels[-1] > 1.0 + tol:
                levels.append(v)
        if len(levels) > 2:
            return False
        if len(levels) == 2:
            ratios.append(levels[1] / levels[0])
    if not ratios:
        return True
    c = ratios[0]
    return all(abs(r - c) <= tol * c for r in ratios)
