"""Foundational domain types: distributions, permutations, source sets, mechanisms.

All types are immutable after construction (backing arrays are frozen), so
values can be shared freely between threads.  Probabilities live on the
M-simplex; a mechanism is an M-by-M row-stochastic matrix Q(j|i) giving the
probability of releasing symbol j when the true symbol is i.  Under Hamming
distortion only the diagonal matters for utility: the per-symbol distortion
is ``D_i = 1 - Q(i|i)`` and the average distortion under a source
distribution P is ``sum_i P_i * (1 - Q(i|i))``.

Leakage values are plain floats in nats; ``math.inf`` marks a mechanism with
a mixed zero/non-zero column, which no finite privacy level can cover.
Indices are 0-based throughout the code; the conventional 1-based indices
appear only in rendered output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NotADistribution

# Normalization is repaired silently only inside these tolerances; anything
# worse is rejected as malformed input.
PROB_SUM_TOL = 1e-9
PROB_ENTRY_TOL = 1e-9
MECH_ROW_SUM_TOL = 1e-9
MECH_ENTRY_TOL = 1e-12
DEDUP_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Distribution:
    """A point on the M-simplex.

    Construct through :func:`distribution`, which validates and renormalizes.
    """

    probs: np.ndarray

    @property
    def M(self) -> int:
        return self.probs.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.probs.shape == other.probs.shape and bool(
            np.array_equal(self.probs, other.probs)
        )

    def __hash__(self):
        return hash(self.probs.tobytes())


def distribution(values) -> Distribution:
    """Validate a probability vector and return a `Distribution`.

    Entries may stray from [0, 1] by at most ``PROB_ENTRY_TOL`` and the sum
    from 1 by at most ``PROB_SUM_TOL``; within those tolerances the vector is
    clipped and renormalized, beyond them it is rejected.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.shape[0] < 2:
        raise NotADistribution(f"need a 1-d vector of length >= 2, got shape {arr.shape}")
    if np.any(arr < -PROB_ENTRY_TOL) or np.any(arr > 1.0 + PROB_ENTRY_TOL):
        raise NotADistribution(f"entries outside [0, 1]: {arr}")
    total = float(arr.sum())
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise NotADistribution(f"entries sum to {total!r}, not 1")
    arr = np.clip(arr, 0.0, 1.0)
    arr = arr / arr.sum()
    return Distribution(_frozen(arr))


def uniform_distribution(M: int) -> Distribution:
    return Distribution(_frozen(np.full(M, 1.0 / M)))


@dataclass(frozen=True)
class Permutation:
    """A bijection T on {0, ..., M-1} stored in one-line notation.

    ``mapping[i]`` is T(i).  Acting on a distribution P produces R with
    ``R[T(i)] = P[i]``.
    """

    mapping: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mapping, dtype=int)
        if sorted(m.tolist()) != list(range(m.shape[0])):
            raise ValueError(f"not a bijection: {m}")
        object.__setattr__(self, "mapping", _frozen_int(m))

    @property
    def M(self) -> int:
        return self.mapping.shape[0]

    @staticmethod
    def identity(M: int) -> "Permutation":
        return Permutation(np.arange(M))

    @staticmethod
    def transposition(M: int, i: int, j: int) -> "Permutation":
        m = np.arange(M)
        m[i], m[j] = m[j], m[i]
        return Permutation(m)

    def __call__(self, i: int) -> int:
        return int(self.mapping[i])

    def inverse(self) -> "Permutation":
        inv = np.empty(self.M, dtype=int)
        inv[self.mapping] = np.arange(self.M)
        return Permutation(inv)

    def compose(self, other: "Permutation") -> "Permutation":
        """Return self after other: (self . other)(i) = self(other(i))."""
        if self.M != other.M:
            raise DimensionMismatch("permutation sizes differ")
        return Permutation(self.mapping[other.mapping])

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.mapping, np.arange(self.M)))

    def one_line(self) -> tuple:
        return tuple(int(x) for x in self.mapping)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return self.one_line() == other.one_line()

    def __hash__(self):
        return hash(self.one_line())

    def cycle_notation(self) -> str:
        """Render in cycle notation with 1-based symbols, e.g. ``(1 2)``."""
        seen = [False] * self.M
        parts = []
        for start in range(self.M):
            if seen[start] or self(start) == start:
                seen[start] = True
                continue
            cyc = [start]
            seen[start] = True
            j = self(start)
            while j != start:
                cyc.append(j)
                seen[j] = True
                j = self(j)
            parts.append("(" + " ".join(str(c + 1) for c in cyc) + ")")
        return "".join(parts) if parts else "id"


def _frozen_int(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=int)
    out.flags.writeable = False
    return out


def apply_permutation(T: Permutation, P: Distribution) -> Distribution:
    """Relabel P by T: the result R satisfies R[T(i)] = P[i]."""
    if T.M != P.M:
        raise DimensionMismatch(f"permutation size {T.M} != distribution size {P.M}")
    out = np.empty(P.M)
    out[T.mapping] = P.probs
    return Distribution(_frozen(out))


def sort_permutation(values) -> Permutation:
    """The permutation T with values[T(0)] >= values[T(1)] >= ... (stable)."""
    arr = np.asarray(values, dtype=float)
    order = np.argsort(-arr, kind="stable")
    return Permutation(order)


@dataclass(frozen=True)
class SourceSet:
    """The convex hull of a finite set of distributions on a common alphabet.

    Only the vertex list is stored; every operation that needs the full hull
    works through linear programs over convex-combination weights.
    """

    vertices: tuple
    M: int = field(default=0)

    def __post_init__(self):
        if self.M == 0:
            object.__setattr__(self, "M", self.vertices[0].M)

    @property
    def vertex_matrix(self) -> np.ndarray:
        """Vertices stacked as rows of an (n_vertices, M) array."""
        return np.array([v.probs for v in self.vertices])

    def __len__(self) -> int:
        return len(self.vertices)


def make_source_set(vertices) -> SourceSet:
    """Validate a vertex list and build a `SourceSet`.

    Accepts raw probability vectors or `Distribution` values.  Duplicate
    vertices (pairwise L-infinity distance <= 1e-12) are dropped; the order
    of the surviving vertices is preserved.
    """
    if len(vertices) == 0:
        raise NotADistribution("source set needs at least one vertex")
    dists = []
    for v in vertices:
        d = v if isinstance(v, Distribution) else distribution(v)
        dists.append(d)
    M = dists[0].M
    for d in dists[1:]:
        if d.M != M:
            raise DimensionMismatch(
                f"vertex lengths differ: {d.M} != {M}"
            )
    kept = []
    for d in dists:
        if all(np.max(np.abs(d.probs - k.probs)) > DEDUP_TOL for k in kept):
            kept.append(d)
    return SourceSet(tuple(kept), M)


@dataclass(frozen=True)
class Mechanism:
    """A row-stochastic conditional distribution Q(j|i) on a common alphabet."""

    rows: np.ndarray

    @property
    def M(self) -> int:
        return self.rows.shape[0]

    @property
    def distortion_vector(self) -> np.ndarray:
        """Per-symbol Hamming distortions D_i = 1 - Q(i|i)."""
        return 1.0 - np.diag(self.rows)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Mechanism):
            return NotImplemented
        return self.rows.shape == other.rows.shape and bool(
            np.array_equal(self.rows, other.rows)
        )

    def __hash__(self):
        return hash(self.rows.tobytes())


def mechanism(rows) -> Mechanism:
    """Validate a square row-stochastic matrix and return a `Mechanism`."""
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 2:
        raise DimensionMismatch(f"need a square matrix of size >= 2, got {arr.shape}")
    if np.any(arr < -MECH_ENTRY_TOL) or np.any(arr > 1.0 + MECH_ENTRY_TOL):
        raise NotADistribution(f"entries outside [0, 1]:\n{arr}")
    sums = arr.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > MECH_ROW_SUM_TOL):
        raise NotADistribution(f"row sums not 1: {sums}")
    arr = np.clip(arr, 0.0, 1.0)
    arr = arr / arr.sum(axis=1, keepdims=True)
    return Mechanism(_frozen(arr))


def identity_mechanism(M: int) -> Mechanism:
    return Mechanism(_frozen(np.eye(M)))


def relabel_mechanism(Q: Mechanism, T: Permutation) -> Mechanism:
    """Permute rows and columns of Q by T: Q'[T(i), T(j)] = Q[i, j]."""
    if Q.M != T.M:
        raise DimensionMismatch(f"mechanism size {Q.M} != permutation size {T.M}")
    out = np.empty_like(Q.rows)
    idx = T.mapping
    out[np.ix_(idx, idx)] = Q.rows
    return Mechanism(_frozen(out))


def expected_distortion(P: Distribution, Q: Mechanism) -> float:
    """Average Hamming distortion sum_i P_i * (1 - Q(i|i))."""
    if P.M != Q.M:
        raise DimensionMismatch(f"distribution size {P.M} != mechanism size {Q.M}")
    return float(P.probs @ Q.distortion_vector)
