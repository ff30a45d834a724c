"""Bounded-variable primal revised simplex.

Two-phase method with artificial variables, dense basis inverse with
periodic refactorization, and Bland's rule engaged as the anti-cycling
safeguard after a run of degenerate pivots. Optimality is certified by
reduced costs nonnegative (at lower bound) respectively nonpositive (at
upper bound) within 1e-9.
"""

from __future__ import annotations

import numpy as np
from scipy import sparse

from .problem import LpSolution, MilpProblem

OPT_TOL = 1e-9        # reduced-cost certificate tolerance
PIV_TOL = 1e-10       # smallest usable pivot element
FEAS_TOL = 1e-7       # phase-1 residual below which the problem counts as feasible
DEGEN_SWITCH = 30     # consecutive degenerate pivots before Bland's rule engages
REFACTOR_EVERY = 200  # pivots between basis-inverse refactorizations

BASIC, AT_LOWER, AT_UPPER = 0, 1, 2


class SimplexStallError(RuntimeError):
    """Raised when the pivot count exceeds the iteration cap."""


class _Tableau:
    """Mutable solver state over structural + slack + artificial columns."""

    def __init__(self, a_csc: sparse.csc_matrix, a_t_csr: sparse.csr_matrix,
                 b, relations, lb, ub):
        self.m, self.n = a_csc.shape
        self.a = a_csc
        self.a_t = a_t_csr
        self.b = np.asarray(b, dtype=float)
        m, n = self.m, self.n

        # bounds for structural, slack, artificial columns
        self.lb = np.concatenate([lb, np.zeros(m), np.zeros(m)])
        self.ub = np.concatenate([ub, np.zeros(m), np.zeros(m)])
        for i, rel in enumerate(relations):
            if rel == "<=":
                self.ub[n + i] = np.inf
            elif rel == ">=":
                self.lb[n + i] = -np.inf
        if np.any(~np.isfinite(lb)) or np.any(~np.isfinite(ub)):
            raise ValueError("all structural variables must have finite bounds")

        self.art_sign = np.ones(m)
        self.status = np.full(n + 2 * m, AT_LOWER, dtype=np.int8)
        self.x = np.zeros(n + 2 * m)
        self.x[:n] = lb
        self.basis = np.arange(n, n + m, dtype=np.int64)

        # slack values at the starting point, clamped into their bounds;
        # artificials absorb what the clamp cut off
        s_raw = self.b - self.a @ self.x[:n] if n else self.b.copy()
        s_clip = np.clip(s_raw, self.lb[n:n + m], self.ub[n:n + m])
        resid = s_raw - s_clip
        self.any_artificial = False
        for i in range(m):
            if abs(resid[i]) > 0.0:
                self.art_sign[i] = 1.0 if resid[i] > 0 else -1.0
                self.ub[n + m + i] = np.inf
                self.x[n + m + i] = abs(resid[i])
                self.basis[i] = n + m + i
                self.x[n + i] = s_clip[i]
                self.status[n + i] = AT_LOWER if s_clip[i] == self.lb[n + i] else AT_UPPER
                self.any_artificial = True
            else:
                self.x[n + i] = s_raw[i]
        self.status[self.basis] = BASIC
        # basis is a mix of slacks (+1 columns) and signed artificials
        diag = np.ones(m)
        for i in range(m):
            if self.basis[i] >= n + m:
                diag[i] = self.art_sign[i]
        self.binv = np.diag(1.0 / diag)

    # -- column access -------------------------------------------------------

    def column_times_binv(self, j: int) -> np.ndarray:
        """w = B^-1 A_j without densifying the structural matrix."""
        n, m = self.n, self.m
        if j < n:
            lo, hi = self.a.indptr[j], self.a.indptr[j + 1]
            rows = self.a.indices[lo:hi]
            vals = self.a.data[lo:hi]
            return self.binv[:, rows] @ vals
        if j < n + m:
            return self.binv[:, j - n].copy()
        i = j - n - m
        return self.art_sign[i] * self.binv[:, i]

    def refactorize(self):
        n, m = self.n, self.m
        if m == 0:
            return
        cols = np.zeros((m, m))
        for r, j in enumerate(self.basis):
            if j < n:
                lo, hi = self.a.indptr[j], self.a.indptr[j + 1]
                cols[self.a.indices[lo:hi], r] = self.a.data[lo:hi]
            elif j < n + m:
                cols[j - n, r] = 1.0
            else:
                cols[j - n - m, r] = self.art_sign[j - n - m]
        self.binv = np.linalg.inv(cols)
        self.recompute_basics()

    def recompute_basics(self):
        n, m = self.n, self.m
        if m == 0:
            return
        nb_struct = self.x[:n].copy()
        nb_struct[self.status[:n] == BASIC] = 0.0
        rhs = self.b - (self.a @ nb_struct if n else 0.0)
        slack_nb = self.status[n:n + m] != BASIC
        rhs[slack_nb] -= self.x[n:n + m][slack_nb]
        art_nb = self.status[n + m:] != BASIC
        rhs[art_nb] -= (self.art_sign * self.x[n + m:])[art_nb]
        self.x[self.basis] = self.binv @ rhs

    # -- pricing -------------------------------------------------------------

    def reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        n, m = self.n, self.m
        y = cost[self.basis] @ self.binv if m else np.zeros(0)
        d = np.empty(n + 2 * m)
        if n:
            d[:n] = cost[:n] - (self.a_t @ y) if m else cost[:n]
        d[n:n + m] = cost[n:n + m] - y
        d[n + m:] = cost[n + m:] - self.art_sign * y
        return d


def _simplex_loop(tab: _Tableau, cost: np.ndarray, max_iter: int, iter_start: int):
    """Run phase iterations until optimal; returns pivot count consumed."""
    n, m = tab.n, tab.m
    fixed = tab.lb == tab.ub
    degen_run = 0
    it = iter_start
    pivots_since_refactor = 0
    while True:
        if it >= max_iter:
            raise SimplexStallError(
                f"simplex exceeded {max_iter} iterations "
                f"(m={m}, n={n}, degenerate run={degen_run})"
            )
        d = tab.reduced_costs(cost)
        elig_lo = (tab.status == AT_LOWER) & ~fixed & (d < -OPT_TOL)
        elig_up = (tab.status == AT_UPPER) & ~fixed & (d > OPT_TOL)
        eligible = elig_lo | elig_up
        if not np.any(eligible):
            return it  # optimal: reduced-cost certificate holds
        if degen_run >= DEGEN_SWITCH:
            j = int(np.flatnonzero(eligible)[0])  # Bland: lowest eligible index
        else:
            score = np.where(eligible, np.abs(d), -1.0)
            j = int(np.argmax(score))
        direction = 1.0 if tab.status[j] == AT_LOWER else -1.0

        w = tab.column_times_binv(j)
        step = direction * w  # basic values move by -theta * step
        xb = tab.x[tab.basis]
        lo_b = tab.lb[tab.basis]
        up_b = tab.ub[tab.basis]

        theta = np.full(m, np.inf)
        dec = step > PIV_TOL
        if np.any(dec):
            theta[dec] = np.maximum(xb[dec] - lo_b[dec], 0.0) / step[dec]
        inc = step < -PIV_TOL
        if np.any(inc):
            theta[inc] = np.maximum(up_b[inc] - xb[inc], 0.0) / (-step[inc])

        own_span = tab.ub[j] - tab.lb[j]
        theta_min = theta.min() if m else np.inf
        theta_star = min(theta_min, own_span)
        if not np.isfinite(theta_star):
            return -1  # unbounded direction

        if own_span <= theta_min:
            # bound flip: entering variable crosses to its other bound
            tab.x[tab.basis] = xb - theta_star * step
            tab.x[j] = tab.ub[j] if direction > 0 else tab.lb[j]
            tab.status[j] = AT_UPPER if direction > 0 else AT_LOWER
            degen_run = degen_run + 1 if theta_star <= OPT_TOL else 0
            it += 1
            continue

        tie = theta <= theta_star + OPT_TOL
        tie_rows = np.flatnonzero(tie)
        if degen_run >= DEGEN_SWITCH:
            r = int(tie_rows[np.argmin(tab.basis[tie_rows])])  # Bland on leaving
        else:
            r = int(tie_rows[np.argmax(np.abs(step[tie_rows]))])
        theta_star = max(theta[r], 0.0)

        leaving = int(tab.basis[r])
        tab.x[tab.basis] = xb - theta_star * step
        tab.x[j] = tab.x[j] + direction * theta_star
        hit_lower = step[r] > 0
        tab.x[leaving] = lo_b[r] if hit_lower else up_b[r]
        tab.status[leaving] = AT_LOWER if hit_lower else AT_UPPER
        tab.status[j] = BASIC
        tab.basis[r] = j
        if leaving >= n + m:
            # artificial left the basis: freeze it out for good
            tab.lb[leaving] = tab.ub[leaving] = 0.0
            fixed[leaving] = True

        # product-form update of the dense basis inverse
        piv = w[r]
        row_r = tab.binv[r] / piv
        tab.binv -= np.outer(w, row_r)
        tab.binv[r] = row_r

        degen_run = degen_run + 1 if theta_star <= OPT_TOL else 0
        it += 1
        pivots_since_refactor += 1
        if pivots_since_refactor >= REFACTOR_EVERY:
            tab.refactorize()
            pivots_since_refactor = 0


def solve_lp(
    problem: MilpProblem,
    bound_overrides: dict[int, tuple[float, float]] | None = None,
    max_iter: int = 50_000,
) -> LpSolution:
    """Solve the LP relaxation of ``problem`` (integrality flags ignored).

    ``bound_overrides`` maps variable index to replacement (lb, ub); the
    branch-and-bound driver uses it to fix binaries without copying the
    problem.
    """
    lb, ub = problem.bounds_arrays()
    if bound_overrides:
        for j, (lo, hi) in bound_overrides.items():
            lb[j], ub[j] = lo, hi
        if np.any(lb > ub):
            return LpSolution(status="infeasible")

    c = problem.objective_vector()
    if problem.sense == "max":
        c = -c
    a = problem.constraint_matrix()
    m = problem.n_constraints

    tab = _Tableau(a, problem.rhs, problem.relations, lb, ub)
    full_cost = np.zeros(problem.n_vars + 2 * m)
    it = 0

    if tab.any_artificial:
        phase1_cost = np.zeros_like(full_cost)
        phase1_cost[problem.n_vars + m:] = 1.0
        it = _simplex_loop(tab, phase1_cost, max_iter, it)
        if it == -1:
            raise AssertionError("phase 1 cannot be unbounded")
        infeas = float(tab.x[problem.n_vars + m:].sum())
        if infeas > FEAS_TOL:
            return LpSolution(status="infeasible", iterations=it)
        # lock every artificial at zero for phase 2
        tab.lb[problem.n_vars + m:] = 0.0
        tab.ub[problem.n_vars + m:] = 0.0

    full_cost[:problem.n_vars] = c
    it2 = _simplex_loop(tab, full_cost, max_iter, it)
    if it2 == -1:
        return LpSolution(status="unbounded", iterations=it)
    tab.refactorize()  # clean solution before reporting

    x = tab.x[:problem.n_vars].copy()
    np.clip(x, lb, ub, out=x)
    obj = float(c @ x)
    if problem.sense == "max":
        obj = -obj
    return LpSolution(status="optimal", x=x, objective=obj, iterations=it2)
