"""Per-timestep splitting of a committed aggregate request among active assets.

Three modes: the proportional heuristic (weights scale-invariant, no bound
checks), a repaired variant that clips shares into the per-asset envelope
boxes and redistributes, and an exact balanced dispatcher minimizing the
sum of squared shares.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .envelope import FlexibilityEnvelope
from .milp.build import window_start

CONSERVATION_TOL = 1e-9


@dataclass(frozen=True)
class DispatchResult:
    shares: np.ndarray = field(repr=False)   # kW per asset
    residual: float                          # unassigned remainder
    mode: str                                # "heuristic" | "repaired" | "balanced"

    def total(self) -> float:
        return float(self.shares.sum()) + self.residual


def activity(u: np.ndarray, i: int, t: int, k: int) -> int:
    """1 iff asset i started inside the covering window ending at t."""
    return int(np.sum(u[i, window_start(t, k):t + 1]))


def flexibility_weight(envelope: FlexibilityEnvelope) -> float:
    """Average envelope width, the dispatch proxy for available flexibility."""
    return float(np.mean(envelope.upper - envelope.lower))


def heuristic_dispatch(r_comm: float, weights, active) -> DispatchResult:
    """Proportional split of the committed request among active assets.

    Shares are weight-proportional with no per-asset bound checks; the
    result conserves the request exactly.
    """
    w = np.asarray(weights, dtype=float)
    a = np.asarray(active, dtype=float)
    if w.shape != a.shape:
        raise ValueError("weights and activity flags must have equal length")
    if np.any(w < 0):
        raise ValueError("flexibility weights must be nonnegative")
    if r_comm == 0.0:
        return DispatchResult(shares=np.zeros_like(w), residual=0.0, mode="heuristic")
    if not np.any(a > 0):
        raise ValueError(
            "nonzero committed request with no active assets; "
            "schedule and commitment are inconsistent"
        )
    denom = float(np.sum(w * a))
    if denom <= 0.0:
        raise ValueError("active assets have zero total flexibility weight")
    shares = a * w / denom * r_comm
    return DispatchResult(shares=shares, residual=0.0, mode="heuristic")


def repair_dispatch(shares, lower, upper, r_comm: float) -> DispatchResult:
    """Clip shares into [lower, upper] boxes and redistribute the excess.

    Redistribution is proportional to the magnitudes of the original
    shares among not-yet-saturated assets; whatever cannot be placed is
    reported as residual so that shares + residual still sum to the
    committed request.
    """
    s = np.asarray(shares, dtype=float).copy()
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    weights = np.abs(np.asarray(shares, dtype=float))
    saturated = np.zeros(len(s), dtype=bool)

    for _ in range(len(s) + 1):
        clipped = np.clip(s, lo, hi)
        overflow = float(np.sum(s - clipped))
        newly = (s != clipped)
        s = clipped
        if not np.any(newly):
            break
        saturated |= newly
        open_mask = ~saturated
        if overflow == 0.0:
            break
        if not np.any(open_mask):
            break
        w = weights[open_mask]
        if w.sum() <= 0:
            w = np.ones(open_mask.sum())
        s[open_mask] += overflow * w / w.sum()
    residual = r_comm - float(s.sum())
    if abs(residual) < CONSERVATION_TOL:
        residual = 0.0
    return DispatchResult(shares=s, residual=residual, mode="repaired")


def balanced_dispatch(r_comm: float, lower, upper, tol: float = 1e-9) -> DispatchResult:
    """Minimize the sum of squared shares subject to conservation and boxes.

    The optimum has the water-filling form share_i = clamp(nu, lo_i, hi_i)
    for a common multiplier nu; the aggregate is monotone in nu, so
    bisection converges unconditionally.
    """
    lo = np.asarray(lower, dtype=float)
    hi = np.asarray(upper, dtype=float)
    if np.any(lo > hi):
        raise ValueError("invalid boxes: lower > upper")
    if not (lo.sum() - tol <= r_comm <= hi.sum() + tol):
        raise ValueError(
            f"request {r_comm} outside the aggregate box "
            f"[{lo.sum()}, {hi.sum()}]"
        )

    def total(nu):
        return float(np.clip(nu, lo, hi).sum())

    lo_nu = float(lo.min() - abs(r_comm) - 1.0)
    hi_nu = float(hi.max() + abs(r_comm) + 1.0)
    for _ in range(200):
        mid = 0.5 * (lo_nu + hi_nu)
        if total(mid) < r_comm:
            lo_nu = mid
        else:
            hi_nu = mid
        if abs(total(mid) - r_comm) <= tol * 0.25:
            break
    shares = np.clip(0.5 * (lo_nu + hi_nu), lo, hi)
    # spread the leftover bisection error over the strictly interior assets
    gap = r_comm - float(shares.sum())
    interior = (shares > lo + tol) & (shares < hi - tol)
    if abs(gap) > 0 and np.any(interior):
        shares[interior] += gap / interior.sum()
    residual = r_comm - float(shares.sum())
    if abs(residual) < CONSERVATION_TOL:
        residual = 0.0
    return DispatchResult(shares=shares, residual=residual, mode="balanced")
