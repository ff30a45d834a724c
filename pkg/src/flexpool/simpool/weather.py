"""Weather inputs on the control grid plus a synthetic generator.

The synthetic generator produces winter-like conditions (diurnal
temperature swing, clear-sky-shaped irradiance scaled by a daily cloud
factor) so experiments run self-contained without measurement data.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

SECONDS_PER_DAY = 86400.0


@dataclass(frozen=True)
class Weather:
    dt: float                                # s
    t_out: np.ndarray = field(repr=False)    # degC
    ghi: np.ndarray = field(repr=False)      # W/m2

    def __post_init__(self):
        t = np.asarray(self.t_out, dtype=float)
        g = np.asarray(self.ghi, dtype=float)
        if t.shape != g.shape or t.ndim != 1:
            raise ValueError("t_out and ghi must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(g))):
            raise ValueError("weather series must be finite")
        if np.any(g < 0):
            raise ValueError("irradiance must be nonnegative")
        object.__setattr__(self, "t_out", t)
        object.__setattr__(self, "ghi", g)

    def __len__(self) -> int:
        return len(self.t_out)

    @property
    def n_days(self) -> float:
        return len(self) * self.dt / SECONDS_PER_DAY

    def window(self, start_step: int, n_steps: int) -> tuple[np.ndarray, np.ndarray]:
        if start_step + n_steps > len(self):
            raise ValueError(
                f"weather window [{start_step}, {start_step + n_steps}) exceeds "
                f"the available {len(self)} steps"
            )
        return (
            self.t_out[start_step:start_step + n_steps],
            self.ghi[start_step:start_step + n_steps],
        )

    def tail(self, start_step: int) -> tuple[np.ndarray, np.ndarray]:
        return self.t_out[start_step:], self.ghi[start_step:]

    def slot_means(self, start_step: int, n_slots: int, steps_per_slot: int) -> np.ndarray:
        """(n_slots, 2) matrix of per-slot mean conditions, the model features."""
        t, g = self.window(start_step, n_slots * steps_per_slot)
        t_m = t.reshape(n_slots, steps_per_slot).mean(axis=1)
        g_m = g.reshape(n_slots, steps_per_slot).mean(axis=1)
        return np.column_stack([t_m, g_m])


def synthetic_weather(
    n_days: int,
    seed: int,
    dt: float = 300.0,
    temp_mean: float = -1.0,
    temp_amplitude: float = 6.0,
    ghi_peak: float = 420.0,
    temp_noise_std: float = 0.6,
) -> Weather:
    """Deterministic winter weather: coldest before dawn, gentle midday sun.

    Cloud cover varies day by day through a factor in [0.35, 1] and the
    temperature carries smoothed AR(1) noise, all from the given seed.
    """
    if n_days < 1:
        raise ValueError("n_days must be >= 1")
    rng = np.random.default_rng(seed)
    steps_per_day = int(round(SECONDS_PER_DAY / dt))
    n = n_days * steps_per_day
    hours = (np.arange(n) * dt / 3600.0) % 24.0

    t_out = temp_mean + temp_amplitude * np.sin(2.0 * np.pi * (hours - 9.0) / 24.0)
    ar = np.empty(n)
    shocks = rng.normal(0.0, temp_noise_std, size=n)
    ar[0] = shocks[0]
    for i in range(1, n):
        ar[i] = 0.98 * ar[i - 1] + 0.02 * shocks[i]
    t_out = t_out + ar

    sun = np.sin(np.pi * (hours - 7.0) / 10.0)
    sun = np.where((hours >= 7.0) & (hours <= 17.0), np.maximum(sun, 0.0), 0.0)
    cloud = rng.uniform(0.35, 1.0, size=n_days)
    ghi = ghi_peak * sun * np.repeat(cloud, steps_per_day)
    return Weather(dt=dt, t_out=t_out, ghi=np.maximum(ghi, 0.0))


def write_weather_csv(weather: Weather, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "t_out_c", "ghi_wm2"])
        for i in range(len(weather)):
            writer.writerow(
                [f"{i * weather.dt:.10g}", f"{weather.t_out[i]:.10g}", f"{weather.ghi[i]:.10g}"]
            )


def read_weather_csv(path) -> Weather:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["time_s", "t_out_c", "ghi_wm2"]:
            raise ValueError(f"unexpected weather header: {header}")
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.asarray(rows, dtype=float)
    if len(data) < 2:
        raise ValueError("weather file needs at least two rows")
    dts = np.diff(data[:, 0])
    if not np.allclose(dts, dts[0]):
        raise ValueError("weather must be uniformly sampled")
    return Weather(dt=float(dts[0]), t_out=data[:, 1], ghi=data[:, 2])
