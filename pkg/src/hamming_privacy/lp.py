"""Self-contained dense linear-program solver.

Solves ``min c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  lower <= x <= upper``
with a two-phase full-tableau simplex.  Problems in this package are small
(tens of variables, a few hundred rows), so a dense tableau is adequate and
keeps the solver dependency-free and bit-reproducible.

Pivoting is deterministic: Dantzig's rule (most negative reduced cost,
smallest index on ties) with an automatic permanent switch to Bland's
anti-cycling rule once the iteration count suggests stalling.  Identical
inputs therefore follow identical pivot sequences.

A small cutting-plane driver is included: callers supply separation oracles
that map a candidate point to a violated inequality, and rows are added
lazily until no oracle objects.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalFailure

FEAS_TOL = 1e-9    # constraint satisfaction / phase-1 infeasibility threshold
OPT_TOL = 1e-8     # optimality certification threshold
PIV_TOL = 1e-10    # smallest admissible pivot magnitude


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearProgram:
    """``min objective.x`` subject to inequalities, equalities and box bounds.

    ``lower``/``upper`` default to [0, +inf) per variable; entries may be
    ``-inf``/``+inf``.
    """

    objective: np.ndarray
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lower: np.ndarray = field(default=None)  # type: ignore[assignment]
    upper: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.objective, dtype=float))
        n = c.shape[0]
        object.__setattr__(self, "objective", c)
        for name in ("a_ub", "a_eq"):
            a = getattr(self, name)
            if a is not None:
                a = np.asarray(a, dtype=float).reshape(-1, n)
                object.__setattr__(self, name, a)
        for aname, bname in (("a_ub", "b_ub"), ("a_eq", "b_eq")):
            a, b = getattr(self, aname), getattr(self, bname)
            if (a is None) != (b is None):
                raise ValueError(f"{aname} and {bname} must be given together")
            if b is not None:
                b = np.atleast_1d(np.asarray(b, dtype=float))
                if b.shape[0] != a.shape[0]:
                    raise ValueError(f"{bname} length {b.shape[0]} != rows {a.shape[0]}")
                object.__setattr__(self, bname, b)
        lo = self.lower if self.lower is not None else np.zeros(n)
        hi = self.upper if self.upper is not None else np.full(n, np.inf)
        lo = np.broadcast_to(np.asarray(lo, dtype=float), (n,)).copy()
        hi = np.broadcast_to(np.asarray(hi, dtype=float), (n,)).copy()
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]

    def with_extra_inequalities(self, rows, rhs) -> "LinearProgram":
        """A copy of this program with additional ``rows @ x <= rhs`` rows."""
        rows = np.asarray(rows, dtype=float).reshape(-1, self.n_vars)
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        if rows.shape[0] == 0:
            return self
        if self.a_ub is None:
            a_ub, b_ub = rows, rhs
        else:
            a_ub = np.vstack([self.a_ub, rows])
            b_ub = np.concatenate([self.b_ub, rhs])
        return LinearProgram(self.objective, a_ub, b_ub, self.a_eq, self.b_eq,
                             self.lower, self.upper)


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    value: float
    point: np.ndarray | None


def solve_lp(lp: LinearProgram) -> LpSolution:
    """Solve the program; status is always meaningful, point only if optimal."""
    tab = _StandardForm(lp)
    return tab.solve()


def feasible(lp: LinearProgram) -> bool:
    """Phase-1 only: does the constraint system admit a point within 1e-9?"""
    tab = _StandardForm(lp)
    return tab.phase1()


def solve_with_cuts(lp: LinearProgram, separators, max_rounds: int = 200) -> LpSolution:
    """Solve ``lp`` while lazily generating rows from separation oracles.

    Each element of ``separators`` is a callable mapping the current optimal
    point to a violated inequality ``(coeffs, rhs)`` (meaning
    ``coeffs @ x <= rhs``), or ``None`` when the point satisfies everything
    the oracle guards.
    """
    extra_rows: list = []
    extra_rhs: list = []
    for _ in range(max_rounds):
        cur = lp.with_extra_inequalities(extra_rows, extra_rhs) if extra_rows else lp
        sol = solve_lp(cur)
        if sol.status is not LpStatus.OPTIMAL:
            return sol
        cuts = [s(sol.point) for s in separators]
        cuts = [c for c in cuts if c is not None]
        if not cuts:
            return sol
        extra_rows.extend(np.asarray(c[0], dtype=float) for c in cuts)
        extra_rhs.extend(float(c[1]) for c in cuts)
    raise NumericalFailure(f"cutting-plane loop did not settle in {max_rounds} rounds")


class _StandardForm:
    """Conversion to ``min c.z, A z = b, z >= 0`` plus the two-phase solve."""

    def __init__(self, lp: LinearProgram):
        n = lp.n_vars
        lo, hi = lp.lower, lp.upper

        # Column bookkeeping: each original variable becomes one nonnegative
        # column (shifted by its finite lower bound, or reflected around a
        # finite upper bound), or a pair of columns when fully free.
        offset = np.zeros(n)       # x = offset + sign * z
        sign = np.ones(n)
        col_of = np.zeros(n, dtype=int)
        extra_free = []            # (var index, negative-part column)
        ub_rows = []               # z_col <= cap
        ncols = 0
        for i in range(n):
            if np.isneginf(lo[i]) and np.isposinf(hi[i]):
                col_of[i] = ncols
                extra_free.append((i, ncols + 1))
                ncols += 2
            elif not np.isneginf(lo[i]):
                offset[i] = lo[i]
                col_of[i] = ncols
                if not np.isposinf(hi[i]):
                    ub_rows.append((ncols, hi[i] - lo[i]))
                ncols += 1
            else:
                offset[i] = hi[i]
                sign[i] = -1.0
                col_of[i] = ncols
                ncols += 1

        def expand(rows: np.ndarray) -> np.ndarray:
            out = np.zeros((rows.shape[0], ncols))
            out[:, col_of] = rows * sign
            for i, neg_col in extra_free:
                out[:, neg_col] = -rows[:, i]
            return out

        ineq_a, ineq_b, eq_a, eq_b = [], [], [], []
        if lp.a_ub is not None:
            ineq_a.append(expand(lp.a_ub))
            ineq_b.append(lp.b_ub - lp.a_ub @ offset)
        if ub_rows:
            rows = np.zeros((len(ub_rows), ncols))
            caps = np.empty(len(ub_rows))
            for r, (cidx, cap) in enumerate(ub_rows):
                rows[r, cidx] = 1.0
                caps[r] = cap
            ineq_a.append(rows)
            ineq_b.append(caps)
        if lp.a_eq is not None:
            eq_a.append(expand(lp.a_eq))
            eq_b.append(lp.b_eq - lp.a_eq @ offset)

        a_in = np.vstack(ineq_a) if ineq_a else np.zeros((0, ncols))
        b_in = np.concatenate(ineq_b) if ineq_b else np.zeros(0)
        a_equ = np.vstack(eq_a) if eq_a else np.zeros((0, ncols))
        b_equ = np.concatenate(eq_b) if eq_b else np.zeros(0)

        n_slack = a_in.shape[0]
        m = n_slack + a_equ.shape[0]
        A = np.zeros((m, ncols + n_slack))
        b = np.concatenate([b_in, b_equ])
        A[:n_slack, :ncols] = a_in
        A[:n_slack, ncols:ncols + n_slack] = np.eye(n_slack)
        A[n_slack:, :ncols] = a_equ
        neg = b < 0
        A[neg] *= -1.0
        b[neg] *= -1.0

        c = np.zeros(ncols + n_slack)
        c[col_of] = lp.objective * sign
        for i, neg_col in extra_free:
            c[neg_col] = -lp.objective[i]

        self.lp = lp
        self.A, self.b, self.c = A, b, c
        self.n_struct = ncols + n_slack
        self.offset, self.sign, self.col_of = offset, sign, col_of
        self.extra_free = extra_free
        self.const_shift = float(lp.objective @ offset)
        self.max_iters = 50 * (self.n_struct + A.shape[0] + 2)

    # -- tableau machinery -------------------------------------------------

    def _pivot(self, T: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
        T[row] /= T[row, col]
        piv = T[row]
        for r in range(T.shape[0]):
            if r != row and abs(T[r, col]) > 0.0:
                T[r] -= T[r, col] * piv
        basis[row] = col

    def _simplex(self, T: np.ndarray, basis: np.ndarray, allowed: int) -> LpStatus:
        """Run simplex on tableau T (last row = reduced costs, last col = rhs)."""
        m = T.shape[0] - 1
        iters = 0
        bland_after = 500 + 5 * (m + allowed)
        while True:
            iters += 1
            if iters > self.max_iters:
                raise NumericalFailure(f"simplex exceeded {self.max_iters} iterations")
            costs = T[-1, :allowed]
            if iters <= bland_after:
                j = int(np.argmin(costs))
                if costs[j] >= -OPT_TOL:
                    return LpStatus.OPTIMAL
            else:
                neg = np.nonzero(costs < -OPT_TOL)[0]
                if neg.size == 0:
                    return LpStatus.OPTIMAL
                j = int(neg[0])
            col = T[:m, j]
            pos = col > PIV_TOL
            if not np.any(pos):
                return LpStatus.UNBOUNDED
            ratios = np.full(m, np.inf)
            ratios[pos] = T[:m, -1][pos] / col[pos]
            best = np.min(ratios)
            ties = np.nonzero(ratios <= best + 1e-12)[0]
            row = int(ties[np.argmin(basis[ties])])
            self._pivot(T, basis, row, j)

    def _phase1_tableau(self):
        A, b = self.A, self.b
        m, n = A.shape
        T = np.zeros((m + 1, n + m + 1))
        T[:m, :n] = A
        T[:m, n:n + m] = np.eye(m)
        T[:m, -1] = b
        basis = np.arange(n, n + m)
        # Phase-1 costs: minimize the artificial sum; price out the basis.
        T[-1, :n] = -A.sum(axis=0)
        T[-1, -1] = -b.sum()
        return T, basis

    def phase1(self) -> bool:
        T, basis = self._phase1_tableau()
        status = self._simplex(T, basis, self.n_struct)
        if status is not LpStatus.OPTIMAL:  # pragma: no cover - phase 1 is bounded
            raise NumericalFailure("phase 1 terminated abnormally")
        return -T[-1, -1] <= FEAS_TOL

    def solve(self) -> LpSolution:
        A = self.A
        m, n = A.shape
        T, basis = self._phase1_tableau()
        status = self._simplex(T, basis, self.n_struct)
        if status is not LpStatus.OPTIMAL or -T[-1, -1] > FEAS_TOL:
            return LpSolution(LpStatus.INFEASIBLE, np.nan, None)

        # Drive leftover artificials out of the basis (or drop their rows).
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if basis[r] >= n:
                cols = np.abs(T[r, :n])
                j = int(np.argmax(cols))
                if cols[j] > PIV_TOL:
                    self._pivot(T, basis, r, j)
                else:
                    keep[r] = False
        if not np.all(keep):
            T = np.vstack([T[:m][keep], T[-1:]])
            basis = basis[keep]
            m = int(keep.sum())

        # Phase 2: swap in the real costs, price out the basis columns.
        T2 = np.zeros((m + 1, n + 1))
        T2[:m, :n] = T[:m, :n]
        T2[:m, -1] = T[:m, -1]
        T2[-1, :n] = self.c
        for r in range(m):
            T2[-1] -= self.c[basis[r]] * T2[r]
        status = self._simplex(T2, basis, n)
        if status is LpStatus.UNBOUNDED:
            return LpSolution(LpStatus.UNBOUNDED, -np.inf, None)

        z = np.zeros(n)
        z[basis] = T2[:m, -1]
        x = self.offset + self.sign * z[self.col_of]
        for i, neg_col in self.extra_free:
            x[i] -= z[neg_col]
        value = float(self.c @ z) + self.const_shift
        return LpSolution(LpStatus.OPTIMAL, value, x)
