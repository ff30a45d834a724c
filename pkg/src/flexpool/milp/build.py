"""Scheduling MILP formulations.

An activation u[i, t] = 1 commits asset i at step t to provide power
deviations inside its envelope for k steps. Covering constraints sum the
activated envelope bounds over the window l in [t_s, t] with
t_s = max(t - k - 1, 0); that window is implemented exactly as printed
even though it keeps an activation in the covering sum for k + 2 grid
points.

The committed formulations scale the request pointwise by d[t] in [0, 1],
so they stay feasible (U = 0, d = 0) whenever the covering margin eps is
nonpositive; eps > 0 is rejected because it would make the zero
commitment infeasible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..envelope import FlexibilityEnvelope
from .problem import MilpProblem, MilpSolution


def window_start(t: int, k: int) -> int:
    return max(t - k - 1, 0)


def per_asset_window_sum(z: np.ndarray, k: int) -> np.ndarray:
    """Row-wise sums sum_{l=t_s}^{t} z[:, l] over the covering window.

    ``z`` is (M, H); the result is (M, H).
    """
    h = z.shape[1]
    cs = np.concatenate([np.zeros((z.shape[0], 1)), np.cumsum(z, axis=1)], axis=1)
    ts = np.maximum(np.arange(h) - k - 1, 0)
    return cs[:, 1:] - cs[:, ts]


def activation_window_sum(values: np.ndarray, u: np.ndarray, k: int) -> np.ndarray:
    """Per-step sums sum_i sum_{l=t_s}^{t} u[i, l] * values[i, l].

    ``values`` and ``u`` are (M, H); the result is (H,).
    """
    return per_asset_window_sum(values * u, k).sum(axis=0)


@dataclass(frozen=True)
class Schedule:
    """Solved activation plan."""

    u: np.ndarray = field(repr=False)        # (M, H) binary activation matrix
    d: np.ndarray = field(repr=False)        # (H,) pointwise scaling in [0, 1]
    committed: np.ndarray = field(repr=False)  # (H,) d * r_agg
    objective: float
    gap: float
    status: str
    k: int

    def __post_init__(self):
        u = np.asarray(self.u)
        if u.ndim != 2 or not np.all((u == 0) | (u == 1)):
            raise ValueError("u must be a binary matrix")
        if np.any(u.sum(axis=1) > 1):
            raise ValueError("each asset may be activated at most once")
        d = np.asarray(self.d, dtype=float)
        if np.any(d < -1e-9) or np.any(d > 1 + 1e-9):
            raise ValueError("scaling factors must lie in [0, 1]")
        object.__setattr__(self, "u", u.astype(np.int8))
        object.__setattr__(self, "d", np.clip(d, 0.0, 1.0))

    def aggregate_bounds(self, envelopes) -> tuple[np.ndarray, np.ndarray]:
        """Aggregated activated envelope bounds per step (lower, upper)."""
        lo = np.stack([e.lower for e in envelopes])
        hi = np.stack([e.upper for e in envelopes])
        return (
            activation_window_sum(lo, self.u, self.k),
            activation_window_sum(hi, self.u, self.k),
        )


@dataclass(frozen=True)
class SchedulingProblem:
    """A built scheduling MILP plus the variable bookkeeping to read it back."""

    kind: str                      # "general" | "self_consumption" | "peak_reduction"
    problem: MilpProblem
    u_index: np.ndarray = field(repr=False)     # (M, H) variable indices
    d_index: np.ndarray | None = field(repr=False, default=None)
    rho_index: int | None = None
    r_agg: np.ndarray = field(repr=False, default=None)
    k: int = 1

    def extract_schedule(self, sol: MilpSolution) -> Schedule:
        if sol.x is None:
            raise ValueError(f"no incumbent to extract (status {sol.status})")
        x = sol.x
        u = np.round(x[self.u_index]).astype(np.int8)
        if self.d_index is not None:
            d = np.clip(x[self.d_index], 0.0, 1.0)
        else:
            d = np.ones(self.u_index.shape[1])
        committed = d * self.r_agg
        return Schedule(
            u=u, d=d, committed=committed,
            objective=sol.objective,
            gap=sol.gap,
            status=sol.status,
            k=self.k,
        )


def _stack_envelopes(envelopes, k: int, r_len: int):
    if not envelopes:
        raise ValueError("need at least one envelope")
    h = envelopes[0].horizon
    for e in envelopes:
        if e.horizon != h:
            raise ValueError("envelopes must share the scheduling horizon")
        if e.k != k:
            raise ValueError(f"envelope has k={e.k}, scheduler expects k={k}")
    if r_len != h:
        raise ValueError(f"request has {r_len} steps, envelopes have horizon {h}")
    lo = np.stack([e.lower for e in envelopes])
    hi = np.stack([e.upper for e in envelopes])
    return lo, hi


def _add_activation_vars(problem: MilpProblem, m: int, h: int) -> np.ndarray:
    u_index = np.empty((m, h), dtype=np.int64)
    for i in range(m):
        for t in range(h):
            u_index[i, t] = problem.add_variable(f"u_{i}_{t}", 0.0, 1.0, integer=True)
    return u_index


def _add_single_activation_rows(problem: MilpProblem, u_index: np.ndarray) -> None:
    for i in range(u_index.shape[0]):
        problem.add_constraint(
            u_index[i], np.ones(u_index.shape[1]), "<=", 1.0, name=f"once_{i}"
        )


def build_general(envelopes, r_agg, k: int, eps: float = 0.0) -> SchedulingProblem:
    """Exact request covering, minimizing the number of activated assets.

    Infeasible whenever the request cannot be covered; no automatic
    fallback to the committed form.
    """
    r = np.asarray(r_agg, dtype=float)
    lo, hi = _stack_envelopes(envelopes, k, len(r))
    m, h = lo.shape
    problem = MilpProblem(name="general_scheduling", sense="min")
    u_index = _add_activation_vars(problem, m, h)
    problem.set_objective({int(j): 1.0 for j in u_index.ravel()})
    _add_single_activation_rows(problem, u_index)
    for t in range(h):
        ts = window_start(t, k)
        idx = u_index[:, ts:t + 1].ravel()
        problem.add_constraint(idx, -lo[:, ts:t + 1].ravel(), ">=", eps - r[t],
                               name=f"cover_lo_{t}")
        problem.add_constraint(idx, -hi[:, ts:t + 1].ravel(), "<=", -eps - r[t],
                               name=f"cover_hi_{t}")
    return SchedulingProblem(kind="general", problem=problem, u_index=u_index,
                             r_agg=r, k=k)


def build_committed(envelopes, r_agg, k: int, eps: float = 0.0) -> SchedulingProblem:
    """Covering constraints with pointwise request scaling; no objective yet."""
    if eps > 0:
        raise ValueError(
            "eps > 0 makes the zero commitment (U=0, d=0) infeasible; use eps <= 0"
        )
    r = np.asarray(r_agg, dtype=float)
    lo, hi = _stack_envelopes(envelopes, k, len(r))
    m, h = lo.shape
    problem = MilpProblem(name="committed_scheduling")
    u_index = _add_activation_vars(problem, m, h)
    d_index = np.asarray(
        [problem.add_variable(f"d_{t}", 0.0, 1.0) for t in range(h)], dtype=np.int64
    )
    _add_single_activation_rows(problem, u_index)
    for t in range(h):
        ts = window_start(t, k)
        idx = np.concatenate([[d_index[t]], u_index[:, ts:t + 1].ravel()])
        problem.add_constraint(
            idx, np.concatenate([[r[t]], -lo[:, ts:t + 1].ravel()]),
            ">=", eps, name=f"cover_lo_{t}",
        )
        problem.add_constraint(
            idx, np.concatenate([[r[t]], -hi[:, ts:t + 1].ravel()]),
            "<=", -eps, name=f"cover_hi_{t}",
        )
    return SchedulingProblem(kind="committed", problem=problem, u_index=u_index,
                             d_index=d_index, r_agg=r, k=k)


def build_self_consumption(envelopes, r_self, k: int) -> SchedulingProblem:
    """Maximize the committed share of a nonnegative excess-production request."""
    r = np.asarray(r_self, dtype=float)
    if np.any(r < 0):
        raise ValueError("self-consumption requests must be nonnegative")
    sp = build_committed(envelopes, r, k)
    sp.problem.set_objective(
        {int(sp.d_index[t]): float(r[t]) for t in range(len(r)) if r[t] != 0.0},
        sense="max",
    )
    sp.problem.name = "self_consumption_scheduling"
    return SchedulingProblem(kind="self_consumption", problem=sp.problem,
                             u_index=sp.u_index, d_index=sp.d_index,
                             r_agg=r, k=sp.k)


def build_peak_reduction(envelopes, p_b_agg, r_peak, k: int) -> SchedulingProblem:
    """Minimize the resulting consumption peak under a nonpositive request."""
    r = np.asarray(r_peak, dtype=float)
    p_b = np.asarray(p_b_agg, dtype=float)
    if np.any(r > 0):
        raise ValueError("peak-reduction requests must be nonpositive")
    if len(p_b) != len(r):
        raise ValueError("baseline consumption and request must share the horizon")
    sp = build_committed(envelopes, r, k)
    problem = sp.problem
    # any feasible peak lies between full and zero request following
    rho_lb = float(np.max(p_b + r))
    rho_ub = float(np.max(p_b))
    rho = problem.add_variable("rho", rho_lb, rho_ub)
    for t in range(len(r)):
        problem.add_constraint(
            [rho, sp.d_index[t]], [1.0, -r[t]], ">=", p_b[t], name=f"peak_{t}"
        )
    problem.set_objective({rho: 1.0}, sense="min")
    problem.name = "peak_reduction_scheduling"
    return SchedulingProblem(kind="peak_reduction", problem=problem,
                             u_index=sp.u_index, d_index=sp.d_index,
                             rho_index=rho, r_agg=r, k=sp.k)
