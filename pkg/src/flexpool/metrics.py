"""Evaluation metrics: peak power reduction, self-consumed fraction,
temperature-bound violation percentage."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np


def peak_power_reduction(p_b_agg, p_agg) -> float:
    """Difference of the baseline and actual consumption peaks, in kW.

    Negative values are possible when rebound effects create a new peak.
    """
    pb = np.asarray(p_b_agg, dtype=float)
    pa = np.asarray(p_agg, dtype=float)
    if pb.size == 0 or pa.size == 0:
        raise ValueError("peak reduction of empty series is undefined")
    if pb.shape != pa.shape:
        raise ValueError("series must have equal length")
    return float(pb.max() - pa.max())


def self_consumed_fraction(g_agg, p_agg) -> float:
    """Share of produced energy consumed directly, in [0, 1]."""
    g = np.asarray(g_agg, dtype=float)
    p = np.asarray(p_agg, dtype=float)
    if g.shape != p.shape:
        raise ValueError("series must have equal length")
    g_sum = float(g.sum())
    if g_sum <= 0:
        raise ValueError("self-consumed fraction undefined without production")
    unused = np.maximum(g - p, 0.0).sum()
    return float((g_sum - unused) / g_sum)


def temp_violation_pct(temps, lower: float, upper: float) -> float:
    """Percentage of samples outside the closed comfort interval.

    Accepts a single trajectory or a (buildings, steps) matrix; every
    sample is weighted equally either way.
    """
    t = np.asarray(temps, dtype=float)
    if t.size == 0:
        raise ValueError("temperature trajectory is empty")
    violations = (t < lower) | (t > upper)
    return float(100.0 * violations.sum() / t.size)


@dataclass(frozen=True)
class MetricReport:
    """Metrics of one experiment variant over the test period."""

    variant: str
    delta_p_a: float                 # kW, mean over days
    delta_s_r: float                 # dimensionless, whole period (nan if no production)
    delta_t_r: float                 # percent, whole period, all buildings
    per_day_peak_reduction: np.ndarray = field(repr=False, default=None)
    tracking_rmse: float = float("nan")  # kW, committed-request tracking error


def daily_peak_reductions(p_b_agg, p_agg, slots_per_day: int) -> np.ndarray:
    """Per-day peak reductions of equal-length aggregate series."""
    pb = np.asarray(p_b_agg, dtype=float)
    pa = np.asarray(p_agg, dtype=float)
    n_days = len(pb) // slots_per_day
    out = np.empty(n_days)
    for d in range(n_days):
        sl = slice(d * slots_per_day, (d + 1) * slots_per_day)
        out[d] = peak_power_reduction(pb[sl], pa[sl])
    return out


def write_reports_csv(reports: list[MetricReport], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", "delta_p_a_kw", "delta_s_r", "delta_t_r_pct",
                         "tracking_rmse_kw"])
        for r in reports:
            writer.writerow([
                r.variant,
                f"{r.delta_p_a:.12g}",
                f"{r.delta_s_r:.12g}",
                f"{r.delta_t_r:.12g}",
                f"{r.tracking_rmse:.12g}",
            ])


def summary_table(reports: list[MetricReport]) -> str:
    out = io.StringIO()
    header = f"{'variant':<18} {'dPa [kW]':>10} {'dSr [-]':>9} {'dTr [%]':>9} {'rmse [kW]':>10}"
    out.write(header + "\n")
    out.write("-" * len(header) + "\n")
    for r in reports:
        out.write(
            f"{r.variant:<18} {r.delta_p_a:>10.3f} {r.delta_s_r:>9.4f} "
            f"{r.delta_t_r:>9.4f} {r.tracking_rmse:>10.4f}\n"
        )
    return out.getvalue()
