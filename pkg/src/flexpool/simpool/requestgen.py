"""Aggregate request construction for the two studied scenarios.

Self-consumption requests absorb excess production above the aggregated
baseline; peak-reduction requests push the forecast total consumption
down to a desired peak level. PV production is a simplified
irradiance-proportional stand-in.
"""

from __future__ import annotations

import csv

import numpy as np


def pv_production(ghi, capacity_kw: float) -> np.ndarray:
    """Irradiance-proportional PV output, clipped to the plant capacity."""
    if capacity_kw < 0:
        raise ValueError("capacity must be nonnegative")
    g = np.asarray(ghi, dtype=float)
    return np.clip(capacity_kw * g / 1000.0, 0.0, capacity_kw)


def gen_self_consumption_request(p_b_agg, g_agg) -> np.ndarray:
    """Excess production above the aggregated baseline, floored at zero."""
    pb = np.asarray(p_b_agg, dtype=float)
    g = np.asarray(g_agg, dtype=float)
    if pb.shape != g.shape:
        raise ValueError("production and baseline must share the grid")
    return np.maximum(g - pb, 0.0)


def gen_peak_request(p_consumption_agg, c: float) -> np.ndarray:
    """Consumption reduction toward the desired peak, capped at zero."""
    if c <= 0:
        raise ValueError("desired peak must be positive")
    p = np.asarray(p_consumption_agg, dtype=float)
    return np.minimum(c - p, 0.0)


def desired_peak(p_day, factor: float) -> float:
    """Desired peak as a multiple of the day's average consumption."""
    p = np.asarray(p_day, dtype=float)
    if p.size == 0:
        raise ValueError("empty consumption day")
    return float(factor * p.mean())


def synthetic_consumption_profile(n_slots: int, slots_per_day: int, seed: int) -> np.ndarray:
    """Normalized double-hump daily consumption shape with seeded variation.

    Used as the stand-in when no measured consumption CSV is supplied;
    the caller rescales it to the pool magnitude.
    """
    rng = np.random.default_rng(seed)
    hours = (np.arange(n_slots) % slots_per_day) * 24.0 / slots_per_day
    morning = np.exp(-0.5 * ((hours - 8.0) / 2.0) ** 2)
    evening = np.exp(-0.5 * ((hours - 19.0) / 2.5) ** 2)
    base = 0.55 + 0.9 * morning + 1.1 * evening
    n_days = int(np.ceil(n_slots / slots_per_day))
    day_scale = rng.uniform(0.85, 1.15, size=n_days)
    scale = np.repeat(day_scale, slots_per_day)[:n_slots]
    wiggle = 1.0 + 0.03 * rng.standard_normal(n_slots)
    return base * scale * np.maximum(wiggle, 0.5)


def rescale_consumption(
    profile, pool_baseline_mean: float, nonshiftable_ratio: float = 1.0
) -> np.ndarray:
    """Scale a consumption profile so its mean matches the pool baseline
    mean times (1 + nonshiftable_ratio).

    The scaled profile is the forecast total consumption: pool baseline
    plus an implied non-shiftable remainder.
    """
    p = np.asarray(profile, dtype=float)
    if p.mean() <= 0:
        raise ValueError("consumption profile must have a positive mean")
    target = pool_baseline_mean * (1.0 + nonshiftable_ratio)
    return p * (target / p.mean())


def read_consumption_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if "p_kw" not in header:
            raise ValueError(f"consumption CSV must have a p_kw column, got {header}")
        col = header.index("p_kw")
        values = [float(row[col]) for row in reader if row]
    if not values:
        raise ValueError("consumption CSV is empty")
    return np.asarray(values, dtype=float)


def write_consumption_csv(values, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p_kw"])
        for v in np.asarray(values, dtype=float):
            writer.writerow([f"{v:.12g}"])
