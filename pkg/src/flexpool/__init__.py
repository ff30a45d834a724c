"""flexpool: data-driven flexibility envelopes, risk-aware scheduling and
dispatch for pools of flexible thermal assets, with a closed-loop RC
building simulator for end-to-end validation."""

from . import dispatch, envelope, metrics, milp, simpool, storage
from .core import ExternalConditions, TimeGrid, TimeSeries, resample_mean
from .envelope import FlexibilityEnvelope, RiskLevel, compute_envelope
from .storage import BaselineStateModel, OperationLog, StorageModel

__version__ = "0.1.0"

__all__ = [
    "BaselineStateModel",
    "ExternalConditions",
    "FlexibilityEnvelope",
    "OperationLog",
    "RiskLevel",
    "StorageModel",
    "TimeGrid",
    "TimeSeries",
    "compute_envelope",
    "dispatch",
    "envelope",
    "metrics",
    "milp",
    "resample_mean",
    "simpool",
    "storage",
]
