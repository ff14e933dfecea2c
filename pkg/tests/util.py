"""Shared test helpers: independent oracles and random instance generators."""

import numpy as np

from hamming_privacy.core import make_source_set


def binary_entropy_nats(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * np.log(p) - (1.0 - p) * np.log(1.0 - p)


def blahut_arimoto_rate_distortion(p, D, tol=1e-10, max_iter=200_000):
    """R(D) in nats for a known source p under Hamming distortion.

    Lagrangian Blahut-Arimoto at a fixed slope s <= 0 alternates
    Q(j|i) ∝ q_j e^{s d(i,j)} and q = pQ; the achieved distortion increases
    with s, so bisection on s pins the target distortion.  Independent of
    the package solvers: only this file's arithmetic.
    """
    p = np.asarray(p, dtype=float)
    M = p.shape[0]
    d_max = 1.0 - p.max()  # zero-rate point: output the most likely symbol
    if D >= d_max - 1e-12:
        return 0.0

    penalty = 1.0 - np.eye(M)  # Hamming distortion matrix

    def solve_slope(s):
        A = np.exp(s * penalty)
        q = np.full(M, 1.0 / M)
        for _ in range(max_iter):
            Q = q[None, :] * A
            Q /= Q.sum(axis=1, keepdims=True)
            q_new = p @ Q
            if np.max(np.abs(q_new - q)) < tol:
                q = q_new
                break
            q = q_new
        Q = q[None, :] * A
        Q /= Q.sum(axis=1, keepdims=True)
        dist = float((p * (1.0 - np.diag(Q))).sum())
        nz = (p[:, None] * Q) > 0
        rate = float(np.sum(np.where(nz, p[:, None] * Q * np.log(Q / np.where(q > 0, q, 1.0)[None, :]), 0.0)))
        return max(rate, 0.0), dist

    lo, hi = -60.0, 0.0  # distortion(s) increases with s
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        _, dist = solve_slope(mid)
        if dist < D:
            lo = mid
        else:
            hi = mid
    rate, _ = solve_slope(0.5 * (lo + hi))
    return rate


def random_sorted_vertex(rng, M, min_gap=0.0):
    """A random descending probability vector (single Class II vertex)."""
    v = np.sort(rng.dirichlet(np.ones(M)))[::-1]
    if min_gap > 0.0:
        v = v + np.linspace(min_gap * (M - 1), 0.0, M)
        v = v / v.sum()
        v = np.sort(v)[::-1]
    return v


def random_class2_source(rng, M, n_vertices=1):
    """A random source set all of whose vertices share the identity ordering."""
    verts = [random_sorted_vertex(rng, M) for _ in range(n_vertices)]
    return make_source_set(verts)
