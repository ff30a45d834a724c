"""Exhaustive scheduling oracle for tests.

Enumerates every activation-start assignment (including "never") and
exploits that for a fixed activation matrix the optimal scaling factor is
closed-form per timestep:

    d[t] = min(1, agg_upper[t] / r[t])   for r[t] > 0
    d[t] = min(1, agg_lower[t] / r[t])   for r[t] < 0
    d[t] = 1                             for r[t] = 0
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_ASSIGNMENTS = 10**6
_CHUNK = 1 << 15


@dataclass(frozen=True)
class BruteForceResult:
    objective: float
    u: np.ndarray = field(repr=False)
    d: np.ndarray = field(repr=False)
    committed: np.ndarray = field(repr=False)
    feasible: bool = True


def _contribution_tables(envelopes, k: int):
    """Per asset: (H+1, H) tables of covering contributions per start choice.

    Row s < H holds the asset's envelope bound at s on the steps whose
    covering window contains s; row H is the "never activated" row.
    """
    h = envelopes[0].horizon
    t_idx = np.arange(h)
    tables_lo, tables_hi = [], []
    for env in envelopes:
        in_window = np.zeros((h + 1, h), dtype=bool)
        for s in range(h):
            # s in [max(t-k-1, 0), t]  <=>  s <= t <= s + k + 1
            in_window[s] = (t_idx >= s) & (t_idx <= s + k + 1)
        tables_lo.append(in_window * np.concatenate([env.lower, [0.0]])[:, None])
        tables_hi.append(in_window * np.concatenate([env.upper, [0.0]])[:, None])
    return tables_lo, tables_hi


def _optimal_d(agg_lo, agg_hi, r):
    """Closed-form best scaling per assignment row; shapes (n, H) and (H,)."""
    d = np.ones(agg_lo.shape)
    pos = r > 0
    if np.any(pos):
        d[:, pos] = np.minimum(1.0, agg_hi[:, pos] / r[pos])
    neg = r < 0
    if np.any(neg):
        d[:, neg] = np.minimum(1.0, agg_lo[:, neg] / r[neg])
    return np.clip(d, 0.0, 1.0)


def brute_force_schedule(
    envelopes,
    request,
    kind: str,
    k: int,
    eps: float = 0.0,
    p_b_agg=None,
) -> BruteForceResult:
    """Exhaustively optimal schedule for small instances.

    ``kind`` is one of "general", "self_consumption", "peak_reduction".
    The general form requires exact covering (no scaling) and minimizes
    activations; the committed forms use the per-step closed-form scaling.
    """
    if kind not in ("general", "self_consumption", "peak_reduction"):
        raise ValueError(f"unknown problem kind {kind!r}")
    r = np.asarray(request, dtype=float)
    m = len(envelopes)
    h = envelopes[0].horizon
    n_assign = (h + 1) ** m
    if n_assign > MAX_ASSIGNMENTS:
        raise ValueError(
            f"(H+1)^M = {n_assign} assignments exceed the oracle cap {MAX_ASSIGNMENTS}"
        )
    if kind == "peak_reduction":
        if p_b_agg is None:
            raise ValueError("peak reduction needs the aggregated baseline p_b_agg")
        p_b = np.asarray(p_b_agg, dtype=float)

    tables_lo, tables_hi = _contribution_tables(envelopes, k)

    best_obj = np.inf if kind != "self_consumption" else -np.inf
    best_combo = None
    best_d = None
    better = np.less if kind != "self_consumption" else np.greater

    digits = np.empty((_CHUNK, m), dtype=np.int64)
    for lo_idx in range(0, n_assign, _CHUNK):
        hi_idx = min(lo_idx + _CHUNK, n_assign)
        count = hi_idx - lo_idx
        flat = np.arange(lo_idx, hi_idx)
        rem = flat.copy()
        for i in range(m - 1, -1, -1):
            digits[:count, i] = rem % (h + 1)
            rem //= h + 1
        combos = digits[:count]

        agg_lo = np.zeros((count, h))
        agg_hi = np.zeros((count, h))
        for i in range(m):
            agg_lo += tables_lo[i][combos[:, i]]
            agg_hi += tables_hi[i][combos[:, i]]

        if kind == "general":
            feas = np.all((r - agg_lo >= eps - 1e-9) & (r - agg_hi <= -eps + 1e-9), axis=1)
            obj = (combos < h).sum(axis=1).astype(float)
            obj[~feas] = np.inf
            d_chunk = None
        else:
            d_chunk = _optimal_d(agg_lo, agg_hi, r)
            if kind == "self_consumption":
                obj = d_chunk @ r
            else:
                obj = (p_b[None, :] + d_chunk * r[None, :]).max(axis=1)

        pick = int(np.argmin(obj)) if kind != "self_consumption" else int(np.argmax(obj))
        if better(obj[pick], best_obj):
            best_obj = float(obj[pick])
            best_combo = combos[pick].copy()
            best_d = None if d_chunk is None else d_chunk[pick].copy()

    if kind == "general" and not np.isfinite(best_obj):
        return BruteForceResult(
            objective=np.inf, u=np.zeros((m, h), dtype=np.int8),
            d=np.ones(h), committed=r.copy(), feasible=False,
        )

    u = np.zeros((m, h), dtype=np.int8)
    for i in range(m):
        if best_combo[i] < h:
            u[i, best_combo[i]] = 1
    d = np.ones(h) if best_d is None else best_d
    return BruteForceResult(
        objective=best_obj, u=u, d=d, committed=d * r, feasible=True,
    )
