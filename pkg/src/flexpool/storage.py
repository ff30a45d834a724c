"""Data-driven virtual storage models of flexible thermal assets.

An asset's charge-like state s in [0, 1] is approximated by a scalar
recursion driven by relative consumption requests r and external
conditions e:

    s[t+1] = s[t] + a_plus * max(r[t], 0) + a_minus_coeff * min(r[t], 0)
             + b_f * (f(e[t]) - s[t]) * [r[t] == 0]
             + f(e[t+1]) - f(e[t])

where f is a learned baseline state model and a_plus / a_minus are
treated as random variables with finitely many identified samples.

Sign convention: both coefficient sample sets store positive values; the
negative-request term lowers the state because min(r, 0) <= 0.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DELTA_RECOVERY_DEFAULT = 0.05   # closure threshold on |s - f(e)| ending a recovery run
LAMBDA_DEFAULT = 1e-4           # ridge strength for the baseline state model


# ---------------------------------------------------------------------------
# baseline state model (Gaussian kernel ridge regression)
# ---------------------------------------------------------------------------

def _as_feature_matrix(e) -> np.ndarray:
    arr = np.asarray(e, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"feature array must be 1-D or 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("feature array contains NaN or infinite entries")
    return arr


def _pairwise_sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", d, d)


@dataclass(frozen=True)
class BaselineStateModel:
    """Gaussian-kernel ridge regression mapping external conditions to the
    request-free state. Predictions are clamped to [0, 1] since the state
    is normalized."""

    inputs: np.ndarray = field(repr=False)    # (n, m) training features
    weights: np.ndarray = field(repr=False)   # (n,) dual coefficients
    sigma: float                              # kernel bandwidth
    lam: float                                # ridge strength

    def predict(self, e) -> np.ndarray:
        x = _as_feature_matrix(e)
        k = np.exp(-_pairwise_sq_dists(x, self.inputs) / (2.0 * self.sigma**2))
        return np.clip(k @ self.weights, 0.0, 1.0)


def fit_baseline_model(
    samples: Sequence[tuple], sigma: float | str = "auto", lam: float = LAMBDA_DEFAULT
) -> BaselineStateModel:
    """Fit the baseline state model from (e-vector, s) pairs.

    ``sigma='auto'`` uses the median pairwise distance of the training
    inputs; a unit bandwidth is substituted when that median is zero but
    the problem is still regularized (lam > 0).
    """
    if len(samples) < 1:
        raise ValueError("need at least one training sample")
    x = _as_feature_matrix([p[0] if np.ndim(p[0]) else [p[0]] for p in samples])
    y = np.asarray([p[1] for p in samples], dtype=float)
    if np.any((y < 0) | (y > 1)):
        raise ValueError("state targets must lie in [0, 1]")
    if lam < 0:
        raise ValueError("ridge strength must be nonnegative")

    sq = _pairwise_sq_dists(x, x)
    if sigma == "auto":
        off_diag = np.sqrt(sq[np.triu_indices(len(x), k=1)])
        med = float(np.median(off_diag)) if off_diag.size else 0.0
        if med <= 0.0:
            if lam <= 0.0:
                raise ValueError(
                    "degenerate training inputs (all identical) with lam=0; "
                    "increase lam or provide distinct inputs"
                )
            med = 1.0
        sigma_val = med
    else:
        sigma_val = float(sigma)
        if sigma_val <= 0:
            raise ValueError("sigma must be positive")

    k = np.exp(-sq / (2.0 * sigma_val**2))
    try:
        w = np.linalg.solve(k + lam * np.eye(len(x)), y)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "kernel system is singular; inputs degenerate with lam=0"
        ) from exc
    return BaselineStateModel(inputs=x, weights=w, sigma=sigma_val, lam=lam)


# ---------------------------------------------------------------------------
# operation logs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OperationLog:
    """Request-grid trajectories consumed by identification."""

    time_s: np.ndarray = field(repr=False)   # (n,)
    s: np.ndarray = field(repr=False)        # (n,) state in [0, 1]
    r_kw: np.ndarray = field(repr=False)     # (n,) relative request
    p_b_kw: np.ndarray = field(repr=False)   # (n,) baseline power
    e: np.ndarray = field(repr=False)        # (n, m) external conditions

    def __post_init__(self):
        n = len(self.time_s)
        for name in ("time_s", "s", "r_kw", "p_b_kw"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"{name} has shape {arr.shape}, expected ({n},)")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains NaN or infinite entries")
            object.__setattr__(self, name, arr)
        e = _as_feature_matrix(self.e)
        if e.shape[0] != n:
            raise ValueError(f"e has {e.shape[0]} rows, expected {n}")
        object.__setattr__(self, "e", e)
        if np.any((self.s < 0) | (self.s > 1)):
            raise ValueError("state s must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.time_s)


def write_operation_log_csv(log: OperationLog, path) -> None:
    m = log.e.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time_s", "s", "r_kw", "p_b_kw"] + [f"e_{j+1}" for j in range(m)])
        for i in range(len(log)):
            row = [f"{log.time_s[i]:.10g}", f"{log.s[i]:.12g}",
                   f"{log.r_kw[i]:.12g}", f"{log.p_b_kw[i]:.12g}"]
            row += [f"{log.e[i, j]:.12g}" for j in range(m)]
            writer.writerow(row)


def read_operation_log_csv(path) -> OperationLog:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:4] != ["time_s", "s", "r_kw", "p_b_kw"]:
            raise ValueError(f"unexpected operation log header: {header}")
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.asarray(rows, dtype=float)
    return OperationLog(
        time_s=data[:, 0], s=data[:, 1], r_kw=data[:, 2],
        p_b_kw=data[:, 3], e=data[:, 4:],
    )


# ---------------------------------------------------------------------------
# episode segmentation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Episode:
    """Index range [t0, t0 + length] into an operation log.

    Request episodes apply requests at t0 .. t0+length-1 (strictly
    one-signed); recovery episodes have zero requests throughout.
    """

    kind: str      # "request" | "recovery"
    t0: int
    length: int    # >= 1; episode endpoint is t0 + length

    def __post_init__(self):
        if self.kind not in ("request", "recovery"):
            raise ValueError(f"unknown episode kind {self.kind!r}")
        if self.length < 1:
            raise ValueError("episode length must be >= 1")

    @property
    def end(self) -> int:
        return self.t0 + self.length


def segment_episodes(
    log: OperationLog,
    baseline: BaselineStateModel | None = None,
    delta: float = DELTA_RECOVERY_DEFAULT,
) -> list[Episode]:
    """Split a log into request and recovery episodes.

    A request episode is a maximal run of strictly one-signed requests,
    terminated at the first step where the request vanishes, changes sign,
    or the state saturates at 0 or 1. A recovery episode is the
    zero-request run immediately following a request episode, terminated
    when a request reappears or the state re-converges to the baseline
    prediction (|s - f(e)| < delta, checked only when ``baseline`` is
    given).
    """
    n = len(log)
    r = log.r_kw
    s = log.s
    f_vals = baseline.predict(log.e) if baseline is not None else None

    episodes: list[Episode] = []
    t = 0
    while t < n - 1:
        if r[t] == 0.0:
            t += 1
            continue
        # request episode starting at t
        sign = math.copysign(1.0, r[t])
        t0 = t
        length = 0
        while t0 + length < n - 1:
            rt = r[t0 + length]
            if rt == 0.0 or math.copysign(1.0, rt) != sign:
                break
            length += 1
            if s[t0 + length] <= 0.0 or s[t0 + length] >= 1.0:
                break
        if length == 0:
            t += 1
            continue
        episodes.append(Episode("request", t0, length))
        t = t0 + length
        # recovery run directly after, only if the requests actually stopped
        if t < n and r[t] == 0.0:
            rec_len = 0
            while t + rec_len < n - 1 and r[t + rec_len] == 0.0:
                rec_len += 1
                if f_vals is not None and abs(s[t + rec_len] - f_vals[t + rec_len]) < delta:
                    break
            if rec_len >= 1:
                episodes.append(Episode("recovery", t, rec_len))
            t += max(rec_len, 1)
    return episodes


# ---------------------------------------------------------------------------
# parameter identification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RequestSampleResult:
    p_plus: np.ndarray       # positive-request response coefficients (> 0)
    p_minus: np.ndarray      # negative-request response coefficients (> 0)
    n_discarded: int         # samples dropped for violating positivity
    n_skipped: int           # episodes skipped for a zero request sum


def identify_request_samples(
    log: OperationLog,
    baseline: BaselineStateModel,
    episodes: Sequence[Episode] | None = None,
) -> RequestSampleResult:
    """Extract one response-coefficient sample per request episode.

    Each sample is the baseline-adjusted state change divided by the
    summed request over the episode. Under the stored sign convention
    valid samples are positive for both request directions; non-positive
    samples are treated as noise, discarded, and counted.
    """
    if episodes is None:
        episodes = segment_episodes(log, baseline)
    f_vals = baseline.predict(log.e)
    plus, minus = [], []
    discarded = skipped = 0
    for ep in episodes:
        if ep.kind != "request":
            continue
        r_sum = float(np.sum(log.r_kw[ep.t0:ep.end]))
        if r_sum == 0.0:
            skipped += 1
            continue
        ds = (log.s[ep.end] - f_vals[ep.end]) - (log.s[ep.t0] - f_vals[ep.t0])
        a = ds / r_sum
        if a <= 0.0:
            discarded += 1
            continue
        (plus if r_sum > 0 else minus).append(a)
    return RequestSampleResult(
        p_plus=np.asarray(plus, dtype=float),
        p_minus=np.asarray(minus, dtype=float),
        n_discarded=discarded,
        n_skipped=skipped,
    )


def _golden_section_min(fun, lo: float, hi: float, tol: float) -> float:
    """Golden-section search for the minimizer of a unimodal function."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    return 0.5 * (a + b)


def identify_recovery_parameter(
    log: OperationLog,
    baseline: BaselineStateModel,
    delta: float = DELTA_RECOVERY_DEFAULT,
    episodes: Sequence[Episode] | None = None,
    tol: float = 1e-8,
) -> float:
    """Fit the recovery rate b_f from the post-request runs of a log.

    For a recovery episode of length l the baseline deviation decays as
    (1 - b)^l, so each episode yields the bounded scalar least-squares fit
    of ((1-b)^l (s0 - f(e0)) + f(el) - sl)^2 over b in [0, 1]. The largest
    per-episode fit is returned.
    """
    if episodes is None:
        episodes = segment_episodes(log, baseline, delta)
    recs = [ep for ep in episodes if ep.kind == "recovery"]
    if not recs:
        raise ValueError(
            "no recovery episodes found; collect more request-free data "
            "after request periods before fitting b_f"
        )
    f_vals = baseline.predict(log.e)
    best = 0.0
    for ep in recs:
        d0 = log.s[ep.t0] - f_vals[ep.t0]
        if d0 == 0.0:
            continue  # any b fits; per-episode value 0 by convention
        target = log.s[ep.end] - f_vals[ep.end]
        l = ep.length

        def resid(b, d0=d0, target=target, l=l):
            return ((1.0 - b) ** l * d0 - target) ** 2

        best = max(best, _golden_section_min(resid, 0.0, 1.0, tol))
    return best


# ---------------------------------------------------------------------------
# assembled model + forward recursion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StorageModel:
    """Identified virtual storage model of one asset."""

    p_plus: np.ndarray = field(repr=False)    # samples of the charge coefficient, > 0
    p_minus: np.ndarray = field(repr=False)   # samples of the discharge coefficient, > 0
    b_f: float                                # recovery rate in [0, 1]
    baseline: BaselineStateModel

    def __post_init__(self):
        plus = np.asarray(self.p_plus, dtype=float)
        minus = np.asarray(self.p_minus, dtype=float)
        if plus.size < 1 or minus.size < 1:
            raise ValueError("need at least one sample in each of p_plus and p_minus")
        if np.any(plus <= 0) or np.any(minus <= 0):
            raise ValueError("coefficient samples must be positive")
        if not 0.0 <= self.b_f <= 1.0:
            raise ValueError("b_f must lie in [0, 1]")
        object.__setattr__(self, "p_plus", plus)
        object.__setattr__(self, "p_minus", minus)

    @property
    def n_pairs(self) -> int:
        """Size of the sample product set."""
        return self.p_plus.size * self.p_minus.size


def simulate_state_recursion(
    s0: float,
    requests: np.ndarray,
    f_values: np.ndarray,
    a_plus: float,
    a_minus: float,
    b_f: float,
) -> np.ndarray:
    """Run the scalar state recursion for given coefficients.

    ``f_values`` must hold baseline-state predictions for every step the
    recursion touches, i.e. len(requests) + 1 entries. The output is not
    clamped; it is a diagnostic trajectory of length len(requests) + 1.
    """
    r = np.asarray(requests, dtype=float)
    f = np.asarray(f_values, dtype=float)
    if len(f) != len(r) + 1:
        raise ValueError(f"need {len(r) + 1} baseline-state values, got {len(f)}")
    out = np.empty(len(r) + 1)
    out[0] = s0
    for t in range(len(r)):
        recover = b_f * (f[t] - out[t]) if r[t] == 0.0 else 0.0
        out[t + 1] = (
            out[t]
            + a_plus * max(r[t], 0.0)
            + a_minus * min(r[t], 0.0)
            + recover
            + f[t + 1] - f[t]
        )
    return out


def predict_state(
    model: StorageModel,
    s0: float,
    requests: np.ndarray,
    e: np.ndarray,
    a_plus: float,
    a_minus: float,
) -> np.ndarray:
    """Forward-simulate the state recursion with a chosen coefficient pair."""
    if not 0.0 <= s0 <= 1.0:
        raise ValueError("s0 must lie in [0, 1]")
    e = _as_feature_matrix(e)
    r = np.asarray(requests, dtype=float)
    if e.shape[0] != len(r) + 1:
        raise ValueError(f"need {len(r) + 1} condition vectors, got {e.shape[0]}")
    f_vals = model.baseline.predict(e)
    return simulate_state_recursion(s0, r, f_vals, a_plus, a_minus, model.b_f)


def fit_storage_model(
    log: OperationLog,
    sigma: float | str = "auto",
    lam: float = LAMBDA_DEFAULT,
    delta: float = DELTA_RECOVERY_DEFAULT,
    baseline_mask: np.ndarray | None = None,
) -> StorageModel:
    """Convenience pipeline: fit f, segment, identify samples and b_f.

    ``baseline_mask`` selects the log rows used to train the baseline
    state model (request-free nominal operation); by default every
    zero-request row is used.
    """
    if baseline_mask is None:
        baseline_mask = log.r_kw == 0.0
    idx = np.flatnonzero(baseline_mask)
    if idx.size < 2:
        raise ValueError("not enough request-free rows to train the baseline model")
    baseline = fit_baseline_model(
        [(log.e[i], log.s[i]) for i in idx], sigma=sigma, lam=lam
    )
    episodes = segment_episodes(log, baseline, delta)
    res = identify_request_samples(log, baseline, episodes)
    if res.p_plus.size < 1 or res.p_minus.size < 1:
        raise ValueError(
            f"identification produced {res.p_plus.size} positive and "
            f"{res.p_minus.size} negative samples; need at least one of each"
        )
    b_f = identify_recovery_parameter(log, baseline, delta, episodes)
    return StorageModel(p_plus=res.p_plus, p_minus=res.p_minus, b_f=b_f, baseline=baseline)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def storage_model_to_dict(model: StorageModel) -> dict:
    return {
        "p_plus": model.p_plus.tolist(),
        "p_minus": model.p_minus.tolist(),
        "b_f": model.b_f,
        "baseline": {
            "inputs": model.baseline.inputs.tolist(),
            "weights": model.baseline.weights.tolist(),
            "sigma": model.baseline.sigma,
            "lam": model.baseline.lam,
        },
    }


def storage_model_from_dict(data: dict) -> StorageModel:
    b = data["baseline"]
    baseline = BaselineStateModel(
        inputs=np.asarray(b["inputs"], dtype=float),
        weights=np.asarray(b["weights"], dtype=float),
        sigma=float(b["sigma"]),
        lam=float(b["lam"]),
    )
    return StorageModel(
        p_plus=np.asarray(data["p_plus"], dtype=float),
        p_minus=np.asarray(data["p_minus"], dtype=float),
        b_f=float(data["b_f"]),
        baseline=baseline,
    )


def save_storage_model(model: StorageModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(storage_model_to_dict(model), fh, indent=1, sort_keys=True)


def load_storage_model(path) -> StorageModel:
    with open(path) as fh:
        return storage_model_from_dict(json.load(fh))
