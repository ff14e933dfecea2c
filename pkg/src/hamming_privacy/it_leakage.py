"""Worst-case mutual-information leakage over a source set.

The quantity of interest is ``min_Q max_P I(P; Q)`` where Q ranges over
mechanisms meeting the distortion budget for every distribution in the hull
and P ranges over the hull itself.  I(P;Q) is convex in Q and concave in P
over compact convex sets, so the exchange of min and max is exact and the
saddle value is well defined.

The numerical solver keeps a finite witness list of distributions.  The
inner step minimizes the witness maximum over valid Q; written through
relative entropy, ``I(P;Q) = sum_ij rel_entr(P_i Q_ij, P_i q_j)`` with
``q = Q'P``, which is jointly convex in its affine arguments, so the inner
problem is an exponential-cone program.  The outer step maximizes the
concave function I(.;Q) over the hull by conditional gradient and either
certifies the duality gap or contributes a new witness.

Only Class I sets admit a closed form: ``ln M - H(D) - D ln(M-1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from .core import Distribution, Mechanism, SourceSet, distribution, mechanism, uniform_distribution
from .errors import DimensionMismatch, DomainError, InfeasibleDistortion, NoConvergence, NumericalFailure
from .mechanisms import collapse_mechanism, symmetric_mechanism

DEFAULT_TOL = 1e-4
MAX_OUTER_ROUNDS = 10_000
ROW_CLIP = 1e-12


@dataclass(frozen=True)
class ItSolution:
    """Saddle-point approximation: value, certification gap, and both players."""

    leakage: float
    saddle_gap: float
    worst_distribution: Distribution
    mechanism: Mechanism


def mutual_information(P: Distribution, Q: Mechanism) -> float:
    """I(X; X-hat) in nats for input law P and mechanism Q; 0*log(0/.) = 0."""
    if P.M != Q.M:
        raise DimensionMismatch(f"distribution size {P.M} != mechanism size {Q.M}")
    p = P.probs
    R = Q.rows
    q = p @ R
    X = p[:, None] * R
    nz = X > 0.0
    terms = np.zeros_like(R)
    qb = np.broadcast_to(q, R.shape)
    terms[nz] = X[nz] * np.log(R[nz] / qb[nz])
    return max(0.0, float(terms.sum()))


def binary_entropy(D: float) -> float:
    """H(D) in nats, with H(0) = H(1) = 0."""
    if D <= 0.0 or D >= 1.0:
        return 0.0
    return -D * math.log(D) - (1.0 - D) * math.log(1.0 - D)


def it_class1(M: int, D: float) -> ItSolution:
    """Closed-form optimum when the hull contains the uniform distribution.

    The worst distribution is uniform and the symmetric mechanism is optimal,
    giving ``ln M - H(D) - D ln(M-1)`` until distortion (M-1)/M, then zero
    (achieved by collapsing every input to one symbol).
    """
    if M < 2:
        raise DomainError(f"alphabet size must be >= 2, got {M}")
    if not 0.0 < D <= 1.0:
        raise DomainError(f"distortion must lie in (0, 1], got {D}")
    worst = uniform_distribution(M)
    if D >= (M - 1) / M - 1e-12:
        return ItSolution(0.0, 0.0, worst, collapse_mechanism(M))
    leakage = math.log(M) - binary_entropy(D) - D * math.log(M - 1)
    return ItSolution(leakage, 0.0, worst, symmetric_mechanism(M, D))


# ---------------------------------------------------------------------------
# Numerical min-max solver.
# ---------------------------------------------------------------------------


def _mi_array(p: np.ndarray, R: np.ndarray) -> float:
    q = p @ R
    X = p[:, None] * R
    nz = X > 0.0
    terms = np.zeros_like(R)
    qb = np.broadcast_to(q, R.shape)
    terms[nz] = X[nz] * np.log(R[nz] / qb[nz])
    return max(0.0, float(terms.sum()))


def _mi_gradient(p: np.ndarray, R: np.ndarray) -> np.ndarray:
    """d I / d P_i = KL(Q(.|i) || q) - 1; rows of R must be strictly positive."""
    q = p @ R
    return (R * np.log(R / q)).sum(axis=1) - 1.0


def _inner_minimize(witnesses, V: np.ndarray, D: float, M: int):
    """min over valid Q of the witness maximum of I, as an exp-cone program."""
    Q = cp.Variable((M, M), nonneg=True)
    t = cp.Variable()
    cons = [cp.sum(Q, axis=1) == 1]
    for v in V:
        cons.append(v @ cp.diag(Q) >= 1.0 - D)
    ones = np.ones(M)
    for p in witnesses:
        q = Q.T @ p
        X = cp.multiply(np.outer(p, ones), Q)
        Y = cp.multiply(np.outer(p, ones), cp.vstack([q] * M))
        cons.append(cp.sum(cp.rel_entr(X, Y)) <= t)
    prob = cp.Problem(cp.Minimize(t), cons)
    for solver in (cp.CLARABEL, cp.SCS):
        try:
            prob.solve(solver=solver)
        except cp.error.SolverError:
            continue
        if prob.status == cp.INFEASIBLE:
            raise InfeasibleDistortion(f"no valid mechanism at distortion {D}")
        if prob.status in (cp.OPTIMAL, "optimal_inaccurate") and Q.value is not None:
            return np.asarray(Q.value), float(t.value)
    raise NumericalFailure("inner convex program failed in every available solver")


def _worst_distribution(V: np.ndarray, R: np.ndarray, steps: int = 200,
                        fw_tol: float = 1e-9) -> np.ndarray:
    """Conditional-gradient maximization of the concave map P -> I(P;Q)."""
    if V.shape[0] == 1:
        return V[0]
    vals = [_mi_array(v, R) for v in V]
    p = V[int(np.argmax(vals))].copy()
    for _ in range(steps):
        g = _mi_gradient(p, R)
        s = V[int(np.argmax(V @ g))]
        d = s - p
        if g @ d <= fw_tol:
            break
        # 1-d concave line search by derivative bisection
        if _mi_gradient(p + d, R) @ d >= 0.0:
            gamma = 1.0
        else:
            lo, hi = 0.0, 1.0
            for _ in range(50):
                mid = 0.5 * (lo + hi)
                if _mi_gradient(p + mid * d, R) @ d > 0.0:
                    lo = mid
                else:
                    hi = mid
            gamma = 0.5 * (lo + hi)
        p = p + gamma * d
    return p


def it_minmax(S: SourceSet, D: float, tol: float = DEFAULT_TOL) -> ItSolution:
    """Approximate the mutual-information saddle value to within ``tol`` nats.

    Maintains a growing witness list initialized with the hull vertices; each
    round solves the witness-restricted inner minimization exactly and asks
    the outer maximization for a distribution the current mechanism treats
    worse.  The reported leakage is ``I(worst_distribution, mechanism)`` and
    the gap is the difference between that value and the witness-restricted
    optimum (an interval containing the true saddle value).
    """
    if not 0.0 < D <= 1.0:
        raise DomainError(f"distortion must lie in (0, 1], got {D}")
    if tol < 1e-5:
        raise DomainError(f"tolerance below 1e-5 is not supported, got {tol}")
    V = S.vertex_matrix
    M = S.M
    witnesses = [V[i] for i in range(V.shape[0])]
    for _ in range(MAX_OUTER_ROUNDS):
        raw_Q, inner_val = _inner_minimize(witnesses, V, D, M)
        R = np.clip(raw_Q, ROW_CLIP, None)
        R /= R.sum(axis=1, keepdims=True)
        worst = _worst_distribution(V, R, fw_tol=min(tol / 20.0, 1e-6))
        outer_val = _mi_array(worst, R)
        gap = max(0.0, outer_val - inner_val)
        if gap <= tol:
            return ItSolution(outer_val, gap, distribution(worst), mechanism(R))
        witnesses.append(worst)
    raise NoConvergence(f"saddle gap stayed above {tol} after {MAX_OUTER_ROUNDS} rounds")
