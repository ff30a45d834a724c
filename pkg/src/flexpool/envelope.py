"""Risk-aware flexibility envelopes.

An envelope gives, for every request-grid step t, the interval
[lower[t], upper[t]] of relative power deviations an asset can sustain for
k consecutive steps without leaving its state or power constraints. The
risk level alpha = j / N tightens the state constraints over the set of
all j-point averages of identified coefficient tuples, so the
probabilistic constraint holds at level 1 - alpha.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .storage import StorageModel

A_MAX_FLOOR = 1e-12        # below this a state constraint is treated as non-binding
ORACLE_MAX_SET_SIZE = 6    # per-sample-set cap for the enumeration oracle


@dataclass(frozen=True)
class RiskLevel:
    """Risk level alpha = j / n_pairs over the coefficient product set."""

    j: int
    n_pairs: int

    def __post_init__(self):
        if not 1 <= self.j <= self.n_pairs:
            raise ValueError(f"j={self.j} must lie in 1..{self.n_pairs}")

    @property
    def alpha(self) -> float:
        return self.j / self.n_pairs

    @classmethod
    def from_alpha(cls, alpha: float, n_pairs: int) -> "RiskLevel":
        """Closest representable risk level; alpha is rounded to j / n_pairs."""
        if not 0.0 < alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        j = min(max(int(round(alpha * n_pairs)), 1), n_pairs)
        return cls(j=j, n_pairs=n_pairs)


@dataclass(frozen=True)
class FlexibilityEnvelope:
    """Per-step bounds on sustainable relative power deviations."""

    lower: np.ndarray = field(repr=False)   # kW, <= 0
    upper: np.ndarray = field(repr=False)   # kW, >= 0
    alpha: float
    k: int                                  # request duration in grid steps
    asset_id: str = ""

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("envelope bounds must be finite")
        if np.any(lo > 1e-12) or np.any(hi < -1e-12):
            raise ValueError("envelope must satisfy lower <= 0 <= upper at every step")
        object.__setattr__(self, "lower", np.minimum(lo, 0.0))
        object.__setattr__(self, "upper", np.maximum(hi, 0.0))
        if self.k < 1:
            raise ValueError("k must be >= 1")

    @property
    def horizon(self) -> int:
        return len(self.lower)

    def width(self) -> np.ndarray:
        return self.upper - self.lower


def tail_average_max(samples, j: int, multiplicity: int = 1) -> float:
    """Average of the j largest elements of a multiset, counting multiplicity.

    With each sample repeated ``multiplicity`` times this equals the
    maximum of the corresponding coordinate over all j-point averages of
    distinct tuples in the coefficient product set, without materializing
    that product.
    """
    values = np.sort(np.asarray(samples, dtype=float))[::-1]
    if multiplicity < 1:
        raise ValueError("multiplicity must be >= 1")
    total = values.size * multiplicity
    if not 1 <= j <= total:
        raise ValueError(f"j={j} out of range 1..{total}")
    full, part = divmod(j, multiplicity)
    acc = float(values[:full].sum()) * multiplicity
    if part:
        acc += float(values[full]) * part
    return acc / j


def _validate_inputs(baseline_power, baseline_state, power_bounds, k):
    p_b = np.asarray(baseline_power, dtype=float)
    f = np.asarray(baseline_state, dtype=float)
    p_lo, p_hi = float(power_bounds[0]), float(power_bounds[1])
    if p_lo > p_hi:
        raise ValueError("power bounds must satisfy p_lo <= p_hi")
    if len(p_b) != len(f):
        raise ValueError("baseline power and baseline state must have equal length")
    if k < 1 or len(f) < k + 1:
        raise ValueError(f"need at least k+1={k + 1} baseline samples, got {len(f)}")
    if np.any(p_b < p_lo - 1e-9) or np.any(p_b > p_hi + 1e-9):
        raise ValueError(
            "baseline power leaves the power bounds; nominal operation must be feasible"
        )
    if np.any(f < -1e-9) or np.any(f > 1 + 1e-9):
        raise ValueError("baseline state predictions must lie in [0, 1]")
    return p_b, np.clip(f, 0.0, 1.0), p_lo, p_hi


def compute_envelope(
    model: StorageModel,
    baseline_power: np.ndarray,
    baseline_state: np.ndarray,
    power_bounds: tuple,
    k: int,
    risk: RiskLevel,
    asset_id: str = "",
) -> FlexibilityEnvelope:
    """Closed-form risk-aware envelope over horizon = len(baseline) - k.

    The state-side bounds use the worst j-point-average coefficients; a
    coefficient below 1e-12 makes the corresponding state constraint
    non-binding and only the power bounds apply.
    """
    p_b, f, p_lo, p_hi = _validate_inputs(baseline_power, baseline_state, power_bounds, k)
    if risk.n_pairs != model.n_pairs:
        raise ValueError("risk level was built for a different sample product size")
    horizon = len(f) - k
    a_plus_max = tail_average_max(model.p_plus, risk.j, multiplicity=model.p_minus.size)
    a_minus_max = tail_average_max(model.p_minus, risk.j, multiplicity=model.p_plus.size)

    lower = np.full(horizon, -np.inf)
    upper = np.full(horizon, np.inf)
    t_idx = np.arange(horizon)
    for l in range(1, k + 1):
        f_l = f[t_idx + l]
        if a_minus_max > A_MAX_FLOOR:
            lower = np.maximum(lower, -f_l / (a_minus_max * l))
        if a_plus_max > A_MAX_FLOOR:
            upper = np.minimum(upper, (1.0 - f_l) / (a_plus_max * l))
    for l in range(k):
        p_l = p_b[t_idx + l]
        lower = np.maximum(lower, p_lo - p_l)
        upper = np.minimum(upper, p_hi - p_l)
    return FlexibilityEnvelope(
        lower=lower, upper=upper, alpha=risk.alpha, k=k, asset_id=asset_id
    )


_COUNT_VECTORS_CACHE: dict = {}


def _count_vectors(m: int, cap: int) -> tuple:
    """All vectors in {0..cap}^m with their row sums, cached per shape."""
    key = (m, cap)
    if key not in _COUNT_VECTORS_CACHE:
        grid = np.indices([cap + 1] * m).reshape(m, -1).T
        _COUNT_VECTORS_CACHE[key] = (grid, grid.sum(axis=1))
    return _COUNT_VECTORS_CACHE[key]


def _j_average_coordinate_values(own: np.ndarray, other_size: int, j: int) -> np.ndarray:
    """All values one coordinate takes over the j-point averages of distinct
    tuples, enumerated directly.

    Choosing j distinct tuples from the product set picks c_q tuples
    carrying sample q of this coordinate, with 0 <= c_q <= other_size and
    sum c_q = j; every such count vector is realizable. Enumerating count
    vectors therefore enumerates exactly the achievable coordinate sums.
    """
    grid, sums = _count_vectors(own.size, other_size)
    vals = grid[sums == j].astype(float) @ own / j
    return np.unique(vals)


def compute_envelope_oracle(
    model: StorageModel,
    baseline_power: np.ndarray,
    baseline_state: np.ndarray,
    power_bounds: tuple,
    k: int,
    risk: RiskLevel,
    asset_id: str = "",
) -> FlexibilityEnvelope:
    """Reference envelope by direct constraint enumeration (tests only).

    Materializes every coordinate value of the j-point-average set and
    intersects every induced scalar constraint for every step offset,
    instead of using the closed form.
    """
    p_b, f, p_lo, p_hi = _validate_inputs(baseline_power, baseline_state, power_bounds, k)
    if risk.n_pairs != model.n_pairs:
        raise ValueError("risk level was built for a different sample product size")
    if model.p_plus.size > ORACLE_MAX_SET_SIZE or model.p_minus.size > ORACLE_MAX_SET_SIZE:
        raise ValueError(
            f"oracle enumeration capped at {ORACLE_MAX_SET_SIZE} samples per set, "
            f"got {model.p_plus.size} x {model.p_minus.size}"
        )
    a_plus_set = _j_average_coordinate_values(model.p_plus, model.p_minus.size, risk.j)
    a_minus_set = _j_average_coordinate_values(model.p_minus, model.p_plus.size, risk.j)
    a_plus_set = a_plus_set[a_plus_set > A_MAX_FLOOR]
    a_minus_set = a_minus_set[a_minus_set > A_MAX_FLOOR]

    horizon = len(f) - k
    t_idx = np.arange(horizon)
    lower = np.full(horizon, -np.inf)
    upper = np.full(horizon, np.inf)
    for l in range(1, k + 1):
        f_l = f[t_idx + l]
        if a_minus_set.size:
            # one bound per (t, element of the j-average set): 0 <= l*a*r + f
            cand = -f_l[:, None] / (a_minus_set[None, :] * l)
            lower = np.maximum(lower, cand.max(axis=1))
        if a_plus_set.size:
            cand = (1.0 - f_l)[:, None] / (a_plus_set[None, :] * l)
            upper = np.minimum(upper, cand.min(axis=1))
    for l in range(k):
        lower = np.maximum(lower, p_lo - p_b[t_idx + l])
        upper = np.minimum(upper, p_hi - p_b[t_idx + l])
    if np.any(lower > 1e-9) or np.any(upper < -1e-9):
        raise AssertionError("baseline infeasible in oracle enumeration")
    return FlexibilityEnvelope(
        lower=lower, upper=upper, alpha=risk.alpha, k=k, asset_id=asset_id
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def write_envelope_csv(env: FlexibilityEnvelope, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# alpha={env.alpha:.12g} k={env.k} asset={env.asset_id}\n")
        writer = csv.writer(fh)
        writer.writerow(["t", "lower_kw", "upper_kw"])
        for t in range(env.horizon):
            writer.writerow([t, f"{env.lower[t]:.12g}", f"{env.upper[t]:.12g}"])


def read_envelope_csv(path) -> FlexibilityEnvelope:
    with open(path, newline="") as fh:
        meta_line = fh.readline().strip()
        if not meta_line.startswith("#"):
            raise ValueError("envelope CSV must start with a '# alpha=... k=... asset=...' line")
        meta = dict(
            item.split("=", 1) for item in meta_line.lstrip("# ").split() if "=" in item
        )
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["t", "lower_kw", "upper_kw"]:
            raise ValueError(f"unexpected envelope header: {header}")
        rows = [row for row in reader if row]
    lower = np.asarray([float(r[1]) for r in rows])
    upper = np.asarray([float(r[2]) for r in rows])
    return FlexibilityEnvelope(
        lower=lower,
        upper=upper,
        alpha=float(meta["alpha"]),
        k=int(meta["k"]),
        asset_id=meta.get("asset", ""),
    )
