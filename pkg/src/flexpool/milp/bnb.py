"""Best-first branch-and-bound over binary variables.

Branches on the most fractional binary (ties to the lowest variable
index), selects nodes by best bound, and terminates once the absolute gap
between incumbent and bound is proven. Deterministic for a fixed problem.
"""

from __future__ import annotations

import heapq
import time

import numpy as np

from .problem import MilpProblem, MilpSolution, SolverOptions
from .simplex import solve_lp

INT_TOL = 1e-7     # integrality tolerance on relaxation values
BOUND_EPS = 1e-9   # slack added to pruning comparisons
ROUNDING_PERIOD = 32   # nodes between fix-and-solve incumbent attempts
ROUND_UP_AT = 0.9      # relaxation value above which a binary is fixed to one


def solve_bnb(problem: MilpProblem, opts: SolverOptions = SolverOptions()) -> MilpSolution:
    """Solve a binary MILP to the requested absolute gap.

    Returns the incumbent with its proven bound; hitting the node or time
    limit returns the best incumbent flagged as gap-unproven.
    """
    int_idx = np.flatnonzero(problem.is_integer)
    sign = 1.0 if problem.sense == "min" else -1.0  # work in min space

    deadline = None
    if opts.time_limit is not None:
        deadline = time.monotonic() + opts.time_limit

    root = solve_lp(problem)
    if root.status == "infeasible":
        return MilpSolution(status="infeasible", nodes=0, gap=np.inf)
    if root.status == "unbounded":
        raise ValueError("relaxation is unbounded; box every variable")

    incumbent = None
    incumbent_obj = np.inf   # min-space objective
    nodes = 0

    def frac_var(x):
        if int_idx.size == 0:
            return None
        dist = np.abs(x[int_idx] - np.round(x[int_idx]))
        cand = np.flatnonzero(dist > INT_TOL)
        if cand.size == 0:
            return None
        # most fractional, ties broken by the lowest variable index
        best = cand[np.argmax(dist[cand])]
        return int(int_idx[best])

    def snap(x):
        out = x.copy()
        out[int_idx] = np.round(out[int_idx])
        return out

    root_obj = sign * root.objective
    branch_j = frac_var(root.x)
    if branch_j is None:
        xi = snap(root.x)
        return MilpSolution(
            status="optimal", x=xi, objective=root.objective,
            bound=root.objective, gap=0.0, nodes=0, gap_proven=True,
        )

    def fix_and_solve(x, fixings):
        """Primal heuristic: freeze binaries at conservative roundings and
        let the LP place the continuous variables. Binaries already fixed
        by the node keep their values."""
        nonlocal incumbent, incumbent_obj
        trial = dict(fixings)
        for j in int_idx:
            if int(j) not in trial:
                v = 1.0 if x[j] > ROUND_UP_AT else 0.0
                trial[int(j)] = (v, v)
        sol = solve_lp(problem, bound_overrides=trial)
        if sol.status != "optimal":
            return
        obj = sign * sol.objective
        if obj < incumbent_obj - BOUND_EPS:
            incumbent = snap(sol.x)
            incumbent_obj = obj

    fix_and_solve(root.x, {})

    heap: list = []
    counter = 0
    for val in (0.0, 1.0):
        heapq.heappush(heap, (root_obj, counter, {branch_j: (val, val)}))
        counter += 1

    limit_hit = False
    while heap:
        best_bound = heap[0][0]
        if incumbent is not None and incumbent_obj - best_bound <= opts.abs_gap + BOUND_EPS:
            break
        if opts.node_limit is not None and nodes >= opts.node_limit:
            limit_hit = True
            break
        if deadline is not None and time.monotonic() > deadline:
            limit_hit = True
            break

        bound, _, fixings = heapq.heappop(heap)
        if incumbent is not None and bound >= incumbent_obj - max(opts.abs_gap, BOUND_EPS):
            continue  # cannot improve beyond the requested gap
        sol = solve_lp(problem, bound_overrides=fixings)
        nodes += 1
        if sol.status == "infeasible":
            continue
        node_obj = sign * sol.objective
        if incumbent is not None and node_obj >= incumbent_obj - BOUND_EPS:
            continue
        j = frac_var(sol.x)
        if j is None:
            incumbent = snap(sol.x)
            incumbent_obj = node_obj
            continue
        if nodes % ROUNDING_PERIOD == 0 or incumbent is None:
            fix_and_solve(sol.x, fixings)
        for val in (0.0, 1.0):
            child = dict(fixings)
            child[j] = (val, val)
            heapq.heappush(heap, (node_obj, counter, child))
            counter += 1

    open_bound = heap[0][0] if heap else np.inf
    best_bound = min(open_bound, incumbent_obj)
    if incumbent is None:
        return MilpSolution(
            status="gap_unproven" if limit_hit else "infeasible",
            nodes=nodes,
            bound=sign * best_bound if np.isfinite(best_bound) else np.nan,
            gap=np.inf,
        )
    gap = max(incumbent_obj - best_bound, 0.0)
    proven = gap <= opts.abs_gap + BOUND_EPS
    return MilpSolution(
        status="optimal" if proven else "gap_unproven",
        x=incumbent,
        objective=sign * incumbent_obj,
        bound=sign * best_bound,
        gap=gap,
        nodes=nodes,
        gap_proven=proven,
    )
