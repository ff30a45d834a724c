"""Closed-loop building-pool simulator standing in for external building
simulation software: RC zones, HP + PID control, weather and request data
handling, greedy comparator, identification data collection."""

from .building import (
    ComfortSpec,
    BuildingParams,
    ParamArrays,
    PidGains,
    PoolState,
    pid_control,
    sample_building,
    step_temperature,
    true_state,
)
from .pool import (
    BuildingPool,
    DayResult,
    ExcitationPolicy,
    SlotControl,
    TrajectoryLog,
    build_pool,
    building_rngs,
    collect_identification_data,
    follow_schedule,
    forecast_baseline,
    greedy_day,
    run_slot,
    simulate_baseline,
)
from .requestgen import (
    desired_peak,
    gen_peak_request,
    gen_self_consumption_request,
    pv_production,
    read_consumption_csv,
    rescale_consumption,
    synthetic_consumption_profile,
    write_consumption_csv,
)
from .weather import Weather, read_weather_csv, synthetic_weather, write_weather_csv

__all__ = [
    "BuildingParams",
    "BuildingPool",
    "ComfortSpec",
    "DayResult",
    "ExcitationPolicy",
    "ParamArrays",
    "PidGains",
    "PoolState",
    "SlotControl",
    "TrajectoryLog",
    "Weather",
    "build_pool",
    "building_rngs",
    "collect_identification_data",
    "desired_peak",
    "follow_schedule",
    "forecast_baseline",
    "gen_peak_request",
    "gen_self_consumption_request",
    "greedy_day",
    "pid_control",
    "pv_production",
    "read_consumption_csv",
    "read_weather_csv",
    "rescale_consumption",
    "run_slot",
    "sample_building",
    "simulate_baseline",
    "step_temperature",
    "synthetic_consumption_profile",
    "synthetic_weather",
    "true_state",
    "write_consumption_csv",
    "write_weather_csv",
]
