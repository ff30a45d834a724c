"""Single-zone RC building with heat pump and PI(D) control.

Thermal balance in kW around a lumped zone temperature T:

    C dT/dt = COP * u * P_max - U * (T - T_out) + g_s * GHI / 1000

with C in kWh/degC, conductance U in kW/degC, HP fraction u in [0, 1] and
solar aperture g_s in m2. Electrical power consumed is u * P_max.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# parameter sampling intervals for pool generation
CAPACITY_RANGE = (2.77, 11.11)     # kWh/degC
CONDUCTANCE_RANGE = (0.2, 0.5)     # kW/degC
HP_POWER_RANGE = (2.0, 5.0)        # kW
COP_RANGE = (4.0, 5.0)
SOLAR_APERTURE_DEFAULT = 3.0       # m2

TRUE_STATE_CAP_HOURS = 48.0        # clone-simulation cap for runtime estimation


@dataclass(frozen=True)
class ComfortSpec:
    setpoint: float = 21.0   # degC
    lower: float = 19.0
    upper: float = 24.0

    def __post_init__(self):
        if not self.lower < self.setpoint < self.upper:
            raise ValueError("comfort bounds must bracket the setpoint")


@dataclass(frozen=True)
class PidGains:
    kp: float = 0.3      # 1/degC
    ki: float = 1e-4     # 1/(degC s)
    kd: float = 0.0      # s/degC


@dataclass(frozen=True)
class BuildingParams:
    """Sampled thermal and equipment parameters of one building."""

    capacity: float              # kWh/degC
    conductance: float           # kW/degC
    hp_max_power: float          # kW electrical
    cop: float
    solar_aperture: float = SOLAR_APERTURE_DEFAULT  # m2


def sample_building(rng: np.random.Generator) -> BuildingParams:
    """Draw building parameters uniformly from the pool intervals.

    HP power scales affinely with the sampled conductance so leakier
    buildings carry proportionally larger heat pumps.
    """
    capacity = rng.uniform(*CAPACITY_RANGE)
    conductance = rng.uniform(*CONDUCTANCE_RANGE)
    cop = rng.uniform(*COP_RANGE)
    span = CONDUCTANCE_RANGE[1] - CONDUCTANCE_RANGE[0]
    hp = HP_POWER_RANGE[0] + (HP_POWER_RANGE[1] - HP_POWER_RANGE[0]) * (
        (conductance - CONDUCTANCE_RANGE[0]) / span
    )
    hp = float(np.clip(hp, *HP_POWER_RANGE))
    return BuildingParams(
        capacity=capacity, conductance=conductance, hp_max_power=hp, cop=cop
    )


@dataclass
class ParamArrays:
    """Column view of a pool's parameters for vectorized stepping."""

    capacity: np.ndarray
    conductance: np.ndarray
    hp_max_power: np.ndarray
    cop: np.ndarray
    solar_aperture: np.ndarray

    @classmethod
    def from_list(cls, params: list[BuildingParams]) -> "ParamArrays":
        return cls(
            capacity=np.asarray([p.capacity for p in params]),
            conductance=np.asarray([p.conductance for p in params]),
            hp_max_power=np.asarray([p.hp_max_power for p in params]),
            cop=np.asarray([p.cop for p in params]),
            solar_aperture=np.asarray([p.solar_aperture for p in params]),
        )

    def __len__(self) -> int:
        return len(self.capacity)


@dataclass
class PoolState:
    """Mutable thermal and controller state of every building."""

    temp: np.ndarray             # degC
    pid_integral: np.ndarray     # degC s
    pid_prev_err: np.ndarray     # degC

    def copy(self) -> "PoolState":
        return PoolState(
            temp=self.temp.copy(),
            pid_integral=self.pid_integral.copy(),
            pid_prev_err=self.pid_prev_err.copy(),
        )

    @classmethod
    def initial(cls, n: int, temp: float = 21.0) -> "PoolState":
        return cls(
            temp=np.full(n, float(temp)),
            pid_integral=np.zeros(n),
            pid_prev_err=np.zeros(n),
        )


def step_temperature(
    temp: np.ndarray,
    params: ParamArrays,
    hp_fraction: np.ndarray,
    t_out: float,
    ghi: float,
    dt_s: float,
) -> np.ndarray:
    """Explicit Euler update of zone temperatures over one control step."""
    heat_kw = (
        params.cop * hp_fraction * params.hp_max_power
        - params.conductance * (temp - t_out)
        + params.solar_aperture * ghi / 1000.0
    )
    return temp + heat_kw * (dt_s / 3600.0) / params.capacity


def pid_control(
    state: PoolState,
    comfort: ComfortSpec,
    gains: PidGains,
    dt_s: float,
    u_lo: np.ndarray | float = 0.0,
    u_hi: np.ndarray | float = 1.0,
) -> np.ndarray:
    """One PI(D) evaluation with conditional-integration anti-windup.

    Mutates the controller state and returns the HP fractions clamped to
    [u_lo, u_hi] (rebound limiting narrows those bounds inside [0, 1]).
    """
    err = comfort.setpoint - state.temp
    cand = state.pid_integral + err * dt_s
    raw = gains.kp * err + gains.ki * cand
    if gains.kd != 0.0:
        raw = raw + gains.kd * (err - state.pid_prev_err) / dt_s
    u = np.clip(raw, u_lo, u_hi)
    freeze = ((raw > u_hi) & (err > 0)) | ((raw < u_lo) & (err < 0))
    state.pid_integral = np.where(freeze, state.pid_integral, cand)
    state.pid_prev_err = err
    return u


def true_state(
    params: ParamArrays,
    temp: np.ndarray,
    t_out_tail: np.ndarray,
    ghi_tail: np.ndarray,
    comfort: ComfortSpec,
    dt_s: float = 300.0,
    cap_hours: float = TRUE_STATE_CAP_HOURS,
) -> np.ndarray:
    """Charge-like state from constant-power runtime simulations.

    Two clones per building run at minimum (off) and maximum HP power
    until the comfort band is left or the cap is hit; the state is the
    minimum-power runtime divided by the total. Weather tails shorter
    than the cap are padded by holding the last sample.
    """
    n_steps = int(round(cap_hours * 3600.0 / dt_s))
    m = len(temp)
    if len(t_out_tail) < n_steps:
        pad = n_steps - len(t_out_tail)
        t_out_tail = np.concatenate([t_out_tail, np.full(pad, t_out_tail[-1])])
        ghi_tail = np.concatenate([ghi_tail, np.full(pad, ghi_tail[-1])])

    runtimes = []
    for u_const in (0.0, 1.0):
        t_cur = np.asarray(temp, dtype=float).copy()
        steps = np.full(m, n_steps)
        # at (or beyond) the relevant bound the runtime is zero by definition
        crossed = t_cur <= comfort.lower if u_const == 0.0 else t_cur >= comfort.upper
        steps[crossed] = 0
        remaining = ~crossed
        u_vec = np.full(m, u_const)
        for step in range(n_steps):
            if not np.any(remaining):
                break
            t_cur = step_temperature(
                t_cur, params, u_vec, t_out_tail[step], ghi_tail[step], dt_s
            )
            out_now = t_cur < comfort.lower if u_const == 0.0 else t_cur > comfort.upper
            newly = remaining & out_now
            steps[newly] = step
            remaining &= ~newly
        runtimes.append(steps.astype(float))

    delta_lo, delta_hi = runtimes
    total = delta_lo + delta_hi
    s = np.where(total > 0, delta_lo / np.maximum(total, 1e-300), 0.5)
    return np.clip(s, 0.0, 1.0)
