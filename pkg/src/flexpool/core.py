"""Shared time-series and configuration types.

Timestamps are integer seconds since an experiment epoch; there is no
calendar or timezone logic anywhere in the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _as_float_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    return arr


@dataclass(frozen=True)
class TimeGrid:
    """Control and request timestep configuration.

    The request grid (the one envelopes, requests and schedules live on)
    must be an integer multiple of the control grid the simulator steps on.
    """

    dt_control: float = 300.0   # s
    dt_request: float = 900.0   # s
    horizon_steps: int = 96     # request-grid steps per scheduling horizon

    def __post_init__(self):
        if self.dt_control <= 0 or self.dt_request <= 0:
            raise ValueError("timesteps must be positive")
        ratio = self.dt_request / self.dt_control
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError(
                f"dt_request={self.dt_request} is not an integer multiple of "
                f"dt_control={self.dt_control}"
            )
        if self.horizon_steps < 1:
            raise ValueError("horizon_steps must be >= 1")

    @property
    def steps_per_slot(self) -> int:
        """Control steps per request-grid slot."""
        return int(round(self.dt_request / self.dt_control))

    @property
    def horizon_seconds(self) -> float:
        return self.horizon_steps * self.dt_request


@dataclass(frozen=True)
class TimeSeries:
    """Immutable uniformly sampled series of finite real values."""

    start: float            # s since epoch
    dt: float               # s
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        arr = _as_float_array(self.values, "values")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def times(self) -> np.ndarray:
        return self.start + self.dt * np.arange(len(self.values))

    def slice(self, i0: int, i1: int) -> "TimeSeries":
        return TimeSeries(self.start + i0 * self.dt, self.dt, self.values[i0:i1])


@dataclass(frozen=True)
class ExternalConditions:
    """Measured external conditions driving an asset (outdoor temperature,
    solar irradiance). Unmeasured disturbances are a simulator concern and
    do not appear here."""

    outdoor_temp: TimeSeries    # degC
    irradiance: TimeSeries      # W/m2

    def __post_init__(self):
        if len(self.outdoor_temp) != len(self.irradiance):
            raise ValueError("outdoor_temp and irradiance must have equal length")
        if np.any(self.irradiance.values < 0):
            raise ValueError("irradiance must be nonnegative")

    def __len__(self) -> int:
        return len(self.outdoor_temp)

    def as_matrix(self) -> np.ndarray:
        """Stack conditions into an (n, 2) feature matrix."""
        return np.column_stack([self.outdoor_temp.values, self.irradiance.values])


def resample_mean(series: TimeSeries, target_dt: float) -> TimeSeries:
    """Downsample by windowed arithmetic means.

    ``target_dt`` must be an integer multiple of ``series.dt``. Trailing
    samples that do not fill a complete target window are dropped, so the
    time-integral of the series is preserved up to that truncation.
    """
    ratio = target_dt / series.dt
    factor = int(round(ratio))
    if abs(ratio - factor) > 1e-9 or factor < 1:
        raise ValueError(
            f"target_dt={target_dt} is not an integer multiple of series dt={series.dt}"
        )
    if factor == 1:
        return series
    n_out = len(series) // factor
    trimmed = series.values[: n_out * factor]
    means = trimmed.reshape(n_out, factor).mean(axis=1)
    return TimeSeries(series.start, target_dt, means)
