"""Closed-loop simulation of a building pool.

All loops advance the pool one request-grid slot at a time: a per-slot
control assignment (PID, fixed power, or rebound-clamped PID) is applied
for the control steps inside the slot, temperatures and electrical powers
are logged on the control grid, and coordination happens only at slot
boundaries. RNG streams are spawned per building from the master seed, so
results do not depend on evaluation order.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from ..core import TimeGrid
from ..milp.build import per_asset_window_sum
from ..storage import OperationLog
from .building import (
    ComfortSpec,
    ParamArrays,
    PidGains,
    PoolState,
    pid_control,
    sample_building,
    step_temperature,
    true_state,
)
from .weather import Weather

MODE_NOMINAL, MODE_FOLLOWING, MODE_REBOUNDING = 0, 1, 2
REBOUND_EXIT_BAND = 0.1    # degC around the setpoint ending a rebound phase

CTRL_PID, CTRL_FIXED, CTRL_CLAMPED = 0, 1, 2


@dataclass
class BuildingPool:
    params: ParamArrays
    comfort: ComfortSpec
    gains: PidGains
    grid: TimeGrid

    def __len__(self) -> int:
        return len(self.params)

    @property
    def asset_ids(self) -> list[str]:
        return [f"b{i:03d}" for i in range(len(self))]


def build_pool(
    n_buildings: int,
    seed: int,
    comfort: ComfortSpec = ComfortSpec(),
    gains: PidGains = PidGains(),
    grid: TimeGrid = TimeGrid(),
) -> tuple[BuildingPool, PoolState]:
    """Sample a pool from per-building RNG streams derived from the seed."""
    streams = np.random.SeedSequence(seed).spawn(n_buildings)
    params = ParamArrays.from_list(
        [sample_building(np.random.default_rng(s)) for s in streams]
    )
    pool = BuildingPool(params=params, comfort=comfort, gains=gains, grid=grid)
    state = PoolState.initial(n_buildings, temp=comfort.setpoint)
    return pool, state


def building_rngs(pool: BuildingPool, seed: int, purpose: str) -> list[np.random.Generator]:
    """Independent per-building generators for one named purpose."""
    tag = zlib.crc32(purpose.encode())  # stable across processes, unlike hash()
    root = np.random.SeedSequence((seed, tag))
    return [np.random.default_rng(s) for s in root.spawn(len(pool))]


@dataclass
class SlotControl:
    kind: np.ndarray      # int8 per building: CTRL_PID / CTRL_FIXED / CTRL_CLAMPED
    power: np.ndarray     # kW target where kind == CTRL_FIXED
    lo: np.ndarray        # kW clamp where kind == CTRL_CLAMPED
    hi: np.ndarray

    @classmethod
    def pid(cls, n: int) -> "SlotControl":
        return cls(
            kind=np.zeros(n, dtype=np.int8),
            power=np.zeros(n), lo=np.zeros(n), hi=np.full(n, np.inf),
        )


def run_slot(
    pool: BuildingPool,
    state: PoolState,
    t_out_steps: np.ndarray,
    ghi_steps: np.ndarray,
    control: SlotControl,
) -> tuple[np.ndarray, np.ndarray]:
    """Advance one request slot; returns (powers, temps) on the control grid."""
    m = len(pool)
    dt = pool.grid.dt_control
    steps = len(t_out_steps)
    p_max = pool.params.hp_max_power

    u_lo = np.zeros(m)
    u_hi = np.ones(m)
    clamped = control.kind == CTRL_CLAMPED
    if np.any(clamped):
        u_lo[clamped] = np.clip(control.lo[clamped] / p_max[clamped], 0.0, 1.0)
        u_hi[clamped] = np.clip(control.hi[clamped] / p_max[clamped], 0.0, 1.0)
        u_hi = np.maximum(u_hi, u_lo)
    fixed = control.kind == CTRL_FIXED
    u_fixed = np.clip(
        np.divide(control.power, p_max, out=np.zeros(m), where=p_max > 0), 0.0, 1.0
    )

    powers = np.empty((m, steps))
    temps = np.empty((m, steps))
    for j in range(steps):
        integ_before = state.pid_integral
        prev_before = state.pid_prev_err
        state.pid_integral = integ_before.copy()
        state.pid_prev_err = prev_before.copy()
        u = pid_control(state, pool.comfort, pool.gains, dt, u_lo, u_hi)
        if np.any(fixed):
            # overridden controllers hold their integrator
            state.pid_integral[fixed] = integ_before[fixed]
            state.pid_prev_err[fixed] = prev_before[fixed]
            u = np.where(fixed, u_fixed, u)
        state.temp = step_temperature(
            state.temp, pool.params, u, t_out_steps[j], ghi_steps[j], dt
        )
        powers[:, j] = u * p_max
        temps[:, j] = state.temp
    return powers, temps


@dataclass
class TrajectoryLog:
    """Control-grid trajectories accumulated over simulated slots."""

    power: np.ndarray = field(repr=False)   # (M, steps) kW electrical
    temp: np.ndarray = field(repr=False)    # (M, steps) degC

    def slot_power(self, steps_per_slot: int) -> np.ndarray:
        m, n = self.power.shape
        slots = n // steps_per_slot
        return self.power[:, :slots * steps_per_slot].reshape(
            m, slots, steps_per_slot
        ).mean(axis=2)


def simulate_baseline(
    pool: BuildingPool,
    state: PoolState,
    weather: Weather,
    start_step: int,
    n_slots: int,
) -> TrajectoryLog:
    """Nominal PID operation (no requests); mutates ``state``."""
    sps = pool.grid.steps_per_slot
    m = len(pool)
    powers = np.empty((m, n_slots * sps))
    temps = np.empty((m, n_slots * sps))
    control = SlotControl.pid(m)
    for t in range(n_slots):
        lo = start_step + t * sps
        t_out, ghi = weather.window(lo, sps)
        p, tp = run_slot(pool, state, t_out, ghi, control)
        powers[:, t * sps:(t + 1) * sps] = p
        temps[:, t * sps:(t + 1) * sps] = tp
    return TrajectoryLog(power=powers, temp=temps)


def forecast_baseline(
    pool: BuildingPool,
    state: PoolState,
    weather: Weather,
    start_step: int,
    n_slots: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Day-ahead baseline forecast from a cloned state.

    Returns per-building slot-mean powers (M, n_slots) and the slot-mean
    external conditions (n_slots, 2). The true state is untouched, and
    the deterministic simulator makes this a perfect forecast.
    """
    clone = state.copy()
    log = simulate_baseline(pool, clone, weather, start_step, n_slots)
    sps = pool.grid.steps_per_slot
    e = weather.slot_means(start_step, n_slots, sps)
    return log.slot_power(sps), e


def _rebound_bounds(p_b_t: np.ndarray, fraction: float) -> tuple[np.ndarray, np.ndarray]:
    lo = np.maximum(p_b_t * (1.0 - fraction), 0.0)
    hi = np.maximum(p_b_t * (1.0 + fraction), 0.0)
    return lo, hi


def _mode_update_slot_start(
    modes: np.ndarray, temp: np.ndarray, comfort: ComfortSpec
) -> None:
    """Rebounding buildings whose temperature reached the setpoint go nominal."""
    done = (modes == MODE_REBOUNDING) & (
        np.abs(temp - comfort.setpoint) < REBOUND_EXIT_BAND
    )
    modes[done] = MODE_NOMINAL


@dataclass
class DayResult:
    trajectory: TrajectoryLog
    slot_deviation: np.ndarray = field(repr=False)    # (M, H) actual minus baseline
    dispatched: np.ndarray = field(repr=False)        # (M, H) requested shares
    residuals: np.ndarray = field(repr=False)         # (H,) dispatch residuals


def follow_schedule(
    pool: BuildingPool,
    state: PoolState,
    weather: Weather,
    start_step: int,
    schedule,
    envelopes,
    p_b: np.ndarray,
    rebound_fraction: float,
    modes: np.ndarray,
    dispatch_mode: str = "heuristic",
) -> DayResult:
    """Run one scheduled day of request following; mutates state and modes.

    Active assets consume clamp(baseline + share, 0, P_max); afterwards
    they rebound with PID output limited to baseline * (1 +- fraction)
    until the temperature re-enters the setpoint band. Dispatched
    requests override rebound limiting. Comfort violations are logged,
    never prevented.
    """
    from ..dispatch import balanced_dispatch, flexibility_weight, heuristic_dispatch, repair_dispatch

    sps = pool.grid.steps_per_slot
    m = len(pool)
    h = schedule.u.shape[1]
    if p_b.shape != (m, h):
        raise ValueError("per-building baseline must be (M, H)")

    activity = per_asset_window_sum(schedule.u.astype(float), schedule.k) > 0.5
    env_lo = np.stack([e.lower for e in envelopes])
    env_hi = np.stack([e.upper for e in envelopes])
    win_lo = per_asset_window_sum(env_lo * schedule.u, schedule.k)
    win_hi = per_asset_window_sum(env_hi * schedule.u, schedule.k)
    weights = np.asarray([flexibility_weight(e) for e in envelopes])

    powers = np.empty((m, h * sps))
    temps = np.empty((m, h * sps))
    slot_dev = np.zeros((m, h))
    dispatched = np.zeros((m, h))
    residuals = np.zeros(h)

    for t in range(h):
        _mode_update_slot_start(modes, state.temp, pool.comfort)
        active = activity[:, t]
        r_comm = float(schedule.committed[t])

        shares = np.zeros(m)
        if np.any(active):
            if r_comm != 0.0:
                if dispatch_mode == "balanced":
                    idx = np.flatnonzero(active)
                    res = balanced_dispatch(r_comm, win_lo[idx, t], win_hi[idx, t])
                    shares[idx] = res.shares
                    residuals[t] = res.residual
                else:
                    res = heuristic_dispatch(r_comm, weights, active)
                    shares = res.shares
                    if dispatch_mode == "repaired":
                        rep = repair_dispatch(
                            shares[active], win_lo[active, t], win_hi[active, t], r_comm
                        )
                        shares = np.zeros(m)
                        shares[active] = rep.shares
                        residuals[t] = rep.residual
            modes[active] = MODE_FOLLOWING
        newly_done = (modes == MODE_FOLLOWING) & ~active
        modes[newly_done] = MODE_REBOUNDING
        dispatched[:, t] = shares

        control = SlotControl.pid(m)
        following = active
        control.kind[following] = CTRL_FIXED
        control.power[following] = np.clip(
            p_b[following, t] + shares[following],
            0.0,
            pool.params.hp_max_power[following],
        )
        rebounding = modes == MODE_REBOUNDING
        control.kind[rebounding] = CTRL_CLAMPED
        lo, hi = _rebound_bounds(p_b[rebounding, t], rebound_fraction)
        control.lo[rebounding] = lo
        control.hi[rebounding] = hi

        lo_step = start_step + t * sps
        t_out, ghi = weather.window(lo_step, sps)
        p, tp = run_slot(pool, state, t_out, ghi, control)
        powers[:, t * sps:(t + 1) * sps] = p
        temps[:, t * sps:(t + 1) * sps] = tp
        slot_dev[:, t] = p.mean(axis=1) - p_b[:, t]

    still = modes == MODE_FOLLOWING
    modes[still] = MODE_REBOUNDING  # schedule is day-scoped
    return DayResult(
        trajectory=TrajectoryLog(power=powers, temp=temps),
        slot_deviation=slot_dev,
        dispatched=dispatched,
        residuals=residuals,
    )


def greedy_day(
    pool: BuildingPool,
    state: PoolState,
    weather: Weather,
    start_step: int,
    r_agg: np.ndarray,
    envelopes,
    p_b: np.ndarray,
    k: int,
    rng: np.random.Generator,
    rebound_fraction: float,
    modes: np.ndarray,
) -> DayResult:
    """Greedy comparator: random activations until the request is coverable.

    Three groups per day: available, active (at most k slots each), and
    inactive for the rest of the day. A comfort-bound violation also
    retires a building. The request is split over active buildings in
    proportion to the envelope headroom at their activation step.
    """
    sps = pool.grid.steps_per_slot
    m = len(pool)
    h = len(r_agg)

    env_lo = np.stack([e.lower for e in envelopes])
    env_hi = np.stack([e.upper for e in envelopes])

    available = np.ones(m, dtype=bool)
    active = np.zeros(m, dtype=bool)
    start_slot = np.full(m, -1)
    powers = np.empty((m, h * sps))
    temps = np.empty((m, h * sps))
    slot_dev = np.zeros((m, h))
    dispatched = np.zeros((m, h))
    residuals = np.zeros(h)

    for t in range(h):
        _mode_update_slot_start(modes, state.temp, pool.comfort)
        # retire expired activations
        expired = active & (t - start_slot >= k)
        active[expired] = False
        modes[expired] = MODE_REBOUNDING
        # comfort violations retire a building for the day
        violating = active & (
            (state.temp < pool.comfort.lower) | (state.temp > pool.comfort.upper)
        )
        active[violating] = False
        modes[violating] = MODE_REBOUNDING

        r_t = float(r_agg[t])
        shares = np.zeros(m)
        if r_t != 0.0:
            def headroom(i):
                s0 = start_slot[i] if start_slot[i] >= 0 else t
                return env_hi[i, s0] if r_t > 0 else -env_lo[i, s0]

            coverage = sum(headroom(i) for i in np.flatnonzero(active))
            pool_order = np.flatnonzero(available)
            rng.shuffle(pool_order)
            for i in pool_order:
                if coverage >= abs(r_t):
                    break
                available[i] = False
                active[i] = True
                start_slot[i] = t
                coverage += headroom(i)
            idx = np.flatnonzero(active)
            heads = np.asarray([headroom(i) for i in idx])
            total = heads.sum()
            if total > 0:
                shares[idx] = r_t * heads / total
            residuals[t] = r_t - shares.sum()
        if np.any(active):
            modes[active] = MODE_FOLLOWING
        dispatched[:, t] = shares

        control = SlotControl.pid(m)
        control.kind[active] = CTRL_FIXED
        control.power[active] = np.clip(
            p_b[active, t] + shares[active], 0.0, pool.params.hp_max_power[active]
        )
        rebounding = (modes == MODE_REBOUNDING) & ~active
        control.kind[rebounding] = CTRL_CLAMPED
        lo, hi = _rebound_bounds(p_b[rebounding, t], rebound_fraction)
        control.lo[rebounding] = lo
        control.hi[rebounding] = hi

        lo_step = start_step + t * sps
        t_out, ghi = weather.window(lo_step, sps)
        p, tp = run_slot(pool, state, t_out, ghi, control)
        powers[:, t * sps:(t + 1) * sps] = p
        temps[:, t * sps:(t + 1) * sps] = tp
        slot_dev[:, t] = p.mean(axis=1) - p_b[:, t]

    still = modes == MODE_FOLLOWING
    modes[still] = MODE_REBOUNDING
    return DayResult(
        trajectory=TrajectoryLog(power=powers, temp=temps),
        slot_deviation=slot_dev,
        dispatched=dispatched,
        residuals=residuals,
    )


# ---------------------------------------------------------------------------
# identification data collection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExcitationPolicy:
    """Randomized constant-request excitation used during identification."""

    periods_per_day: int = 2
    magnitude_range: tuple = (0.2, 0.8)   # fraction of the available headroom
    enabled: bool = True


def _excitation_plan(
    rng: np.random.Generator,
    n_slots: int,
    k: int,
    p_b_day: np.ndarray,
    p_max: float,
    policy: ExcitationPolicy,
) -> list[tuple[int, int, float]]:
    """Per-day request periods (start, length, value) for one building.

    Periods are capped at a quarter day so the configured number of
    periods plus k-step recovery gaps always fits the day.
    """
    if not policy.enabled:
        return []
    length = min(k, n_slots // 4)
    if length < 1:
        return []
    plan = []
    cursor_min = 0
    for p in range(policy.periods_per_day):
        remaining = n_slots - (policy.periods_per_day - p - 1) * (length + k)
        hi = remaining - length
        if hi < cursor_min:
            break
        start = int(rng.integers(cursor_min, hi + 1))
        window = p_b_day[start:start + length]
        sign = 1.0 if rng.random() < 0.5 else -1.0
        up_head = max(p_max - float(window.max()), 0.0)
        down_head = max(float(window.min()), 0.0)
        head = up_head if sign > 0 else down_head
        if head < 0.05 * p_max:
            sign = -sign
            head = down_head if sign < 0 else up_head
        value = sign * float(rng.uniform(*policy.magnitude_range)) * head
        if head >= 0.05 * p_max:
            plan.append((start, length, value))
        cursor_min = start + length + k
    return plan


def collect_identification_data(
    pool: BuildingPool,
    state: PoolState,
    weather: Weather,
    start_step: int,
    n_days: int,
    k: int,
    rebound_fraction: float,
    seed: int,
    policy: ExcitationPolicy = ExcitationPolicy(),
) -> list[OperationLog]:
    """Nominal operation interleaved with randomized constant requests.

    Logs, per building and request slot: the ground-truth state at the
    slot start, the realized request (mean power deviation from the
    baseline forecast during excitation slots, zero otherwise), the
    baseline forecast, and the slot-mean external conditions.
    """
    sps = pool.grid.steps_per_slot
    m = len(pool)
    slots_per_day = int(round(86400.0 / pool.grid.dt_request))
    rngs = building_rngs(pool, seed, "excitation")
    modes = np.zeros(m, dtype=np.int8)

    rows_time, rows_s, rows_r, rows_pb, rows_e = [], [], [], [], []
    for day in range(n_days):
        day_step = start_step + day * slots_per_day * sps
        p_b, e_slots = forecast_baseline(pool, state, weather, day_step, slots_per_day)
        plans = [
            _excitation_plan(
                rngs[i], slots_per_day, k, p_b[i], pool.params.hp_max_power[i], policy
            )
            for i in range(m)
        ]
        req = np.zeros((m, slots_per_day))
        for i, plan in enumerate(plans):
            for start, length, value in plan:
                req[i, start:start + length] = value

        day_s = np.empty((m, slots_per_day))
        day_dev = np.zeros((m, slots_per_day))
        for t in range(slots_per_day):
            step_now = day_step + t * sps
            _mode_update_slot_start(modes, state.temp, pool.comfort)
            day_s[:, t] = true_state(
                pool.params, state.temp, *weather.tail(step_now), pool.comfort,
                dt_s=pool.grid.dt_control,
            )
            exciting = req[:, t] != 0.0
            was_following = modes == MODE_FOLLOWING
            modes[exciting] = MODE_FOLLOWING
            modes[was_following & ~exciting] = MODE_REBOUNDING

            control = SlotControl.pid(m)
            control.kind[exciting] = CTRL_FIXED
            control.power[exciting] = np.clip(
                p_b[exciting, t] + req[exciting, t],
                0.0,
                pool.params.hp_max_power[exciting],
            )
            rebounding = modes == MODE_REBOUNDING
            control.kind[rebounding] = CTRL_CLAMPED
            lo, hi = _rebound_bounds(p_b[rebounding, t], rebound_fraction)
            control.lo[rebounding] = lo
            control.hi[rebounding] = hi

            t_out, ghi = weather.window(step_now, sps)
            p, _ = run_slot(pool, state, t_out, ghi, control)
            dev = p.mean(axis=1) - p_b[:, t]
            day_dev[exciting, t] = dev[exciting]

        times = (day_step + np.arange(slots_per_day) * sps) * pool.grid.dt_control
        rows_time.append(np.broadcast_to(times, (m, slots_per_day)))
        rows_s.append(day_s)
        rows_r.append(day_dev)
        rows_pb.append(p_b)
        rows_e.append(e_slots)

    time_all = np.concatenate(rows_time, axis=1)
    s_all = np.concatenate(rows_s, axis=1)
    r_all = np.concatenate(rows_r, axis=1)
    pb_all = np.concatenate(rows_pb, axis=1)
    e_all = np.concatenate(rows_e, axis=0)
    return [
        OperationLog(
            time_s=time_all[i], s=s_all[i], r_kw=r_all[i], p_b_kw=pb_all[i], e=e_all
        )
        for i in range(m)
    ]
