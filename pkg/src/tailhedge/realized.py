"""Realized third-moment variation, swap payoff, hedged returns, the
hedge-number optimizer, QQ diagnostics and the transaction-cost backtest.

The realized variation of a log-return path is the partition sum
sum_i (R_i - R_{i-1}) * (R_i^2 - R_{i-1}^2); the swap's floating leg is its
negative.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.optimize import golden
from scipy.stats import norm

from .errors import DataError, DegenerateSampleError, InsolvencyError
from .models import SwapSpec


@dataclass(frozen=True)
class ReturnPath:
    """Cumulative log-return series on a strictly increasing time grid
    (year fractions).  The first observation anchors the path at zero."""
    times: np.ndarray
    log_returns: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        r = np.asarray(self.log_returns, dtype=float)
        if t.shape != r.shape or t.ndim != 1:
            raise DataError("times and log_returns must be equal-length 1-d")
        if t.size and not np.all(np.diff(t) > 0):
            raise DataError("times must be strictly increasing")
        if r.size and r[0] != 0.0:
            raise DataError("first log-return must be exactly 0")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "log_returns", r)


@dataclass(frozen=True)
class BacktestConfig:
    """Leg schedule and cost model for the rolling-swap backtest.

    multi_leg=True models one long-dated contract with many legs, so the
    transaction cost is charged once at inception; otherwise every roll
    pays cost_rate times the current portfolio value.
    """
    rebalance_interval: int
    cost_rate: float = 0.0
    multi_leg: bool = False

    def __post_init__(self):
        if self.rebalance_interval < 1:
            raise DataError("rebalance_interval must be >= 1")
        if not 0.0 <= self.cost_rate < 1.0:
            raise DataError("cost_rate must lie in [0, 1)")


def third_moment_variation(path: ReturnPath) -> float:
    """Realized quadratic covariation between the return and its square."""
    r = path.log_returns
    if r.size < 2:
        raise DataError("need at least 2 observations")
    dr = np.diff(r)
    dr2 = np.diff(r ** 2)
    return float(np.sum(dr * dr2))


def swap_payoff(path: ReturnPath, spec: SwapSpec) -> float:
    """Buyer's payoff: beta * S0 * (-variation) minus the fixed leg."""
    if path.times[-1] < spec.maturity_T:
        raise DataError(f"path ends at {path.times[-1]}, before maturity "
                        f"{spec.maturity_T}")
    var = third_moment_variation(path)
    return spec.beta * spec.notional_scale * (-var) - spec.fixed_leg


def hedged_log_return(path: ReturnPath, spec: SwapSpec,
                      mode: str = "linearized") -> float:
    """Log-return of underlying plus swap over the path's horizon.

    exact:      log(e^{R_T} - beta * variation)
    linearized: R_T - beta * variation
    """
    r_T = float(path.log_returns[-1])
    var = third_moment_variation(path)
    if mode == "linearized":
        return r_T - spec.beta * var
    if mode == "exact":
        value = np.exp(r_T) - spec.beta * var
        if value <= 0:
            raise InsolvencyError(f"hedged portfolio value {value} <= 0")
        return float(np.log(value))
    raise DataError(f"unknown mode {mode!r}")


def qq_points(samples, quantile_count: int):
    """(standard normal quantile, empirical quantile) pairs at equally
    spaced interior probability levels.

    Empirical quantiles interpolate order statistics with the
    p_k = k/(n+1) plotting convention, so a sample of size n evaluated at
    its own plotting positions returns the order statistics exactly.
    """
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise DataError("empty sample")
    k = np.arange(1, quantile_count + 1)
    p = k / (quantile_count + 1)
    emp = np.quantile(x, p, method="weibull")
    return np.column_stack([norm.ppf(p), emp])


_N_LEVELS = 199  # probability levels k/200, k = 1..199


def _qq_objective(beta: float, r: np.ndarray, y: np.ndarray) -> float:
    x = r - beta * y
    m, s = x.mean(), x.std()
    if s == 0:
        raise DegenerateSampleError("portfolio sample has zero variance")
    p = np.arange(1, _N_LEVELS + 1) / (_N_LEVELS + 1)
    q_emp = np.quantile(x, p, method="hazen")
    q_norm = norm.ppf(p, loc=m, scale=s)
    return float(np.sum((q_emp - q_norm) ** 2))


def optimize_hedge_number(r_samples, y_samples, search=(0.0, 100.0),
                          grid_points: int = 51, tol: float = 1e-4) -> float:
    """Hedge number minimizing the squared gap between the portfolio's
    empirical quantiles and the matched-moment normal quantiles.

    Coarse grid scan bracketing the minimum, then golden-section
    refinement.  Flat objectives resolve to the lower search bound.
    """
    r = np.asarray(r_samples, dtype=float)
    y = np.asarray(y_samples, dtype=float)
    if r.shape != y.shape or r.ndim != 1:
        raise DataError("samples must be aligned 1-d sequences")
    if r.size < 100:
        raise DataError("need at least 100 samples")
    lo, hi = search
    if not lo < hi:
        raise DataError("search interval must satisfy lo < hi")

    betas = np.linspace(lo, hi, grid_points)
    obj = np.array([_qq_objective(b, r, y) for b in betas])
    if obj.max() - obj.min() <= 1e-12 * max(1.0, abs(obj.max())):
        return float(lo)  # beta has no effect; documented tie-break
    k = int(np.argmin(obj))
    b_lo = betas[max(k - 1, 0)]
    b_hi = betas[min(k + 1, grid_points - 1)]
    if k in (0, grid_points - 1):
        # minimum at the edge of the scan: refine inside the edge cell
        best = golden(lambda b: _qq_objective(b, r, y),
                      brack=(b_lo, betas[k], b_hi) if 0 < k < grid_points - 1
                      else (b_lo, b_hi), tol=tol, full_output=False) \
            if b_lo < b_hi else betas[k]
        best = float(np.clip(best, lo, hi))
        return best if _qq_objective(best, r, y) <= obj[k] else float(betas[k])
    best = float(golden(lambda b: _qq_objective(b, r, y),
                        brack=(b_lo, betas[k], b_hi), tol=tol))
    return float(np.clip(best, lo, hi))


@dataclass(frozen=True)
class BacktestResult:
    times: np.ndarray
    portfolio_value: np.ndarray
    underlying_value: np.ndarray
    insolvent: bool


def backtest(path: ReturnPath, spec: SwapSpec,
             config: BacktestConfig) -> BacktestResult:
    """Roll the swap over consecutive windows of the path and compound the
    hedged value.

    Within a window only the underlying is marked; the swap payoff hits at
    the leg boundary.  The final partial window (if any) realizes its
    accrued variation at the path's end.  A nonpositive value terminates
    the series with insolvent=True.
    """
    t, r = path.times, path.log_returns
    n = r.size
    if n < config.rebalance_interval + 1:
        raise DataError("path shorter than one rebalance window")

    value = np.empty(n)
    value[0] = 1.0
    v = 1.0
    insolvent = False
    charged_inception = False
    last = n - 1
    start = 0
    while start < n - 1 and not insolvent:
        if config.cost_rate > 0 and (not config.multi_leg or not charged_inception):
            v *= 1.0 - config.cost_rate
            charged_inception = True
            value[start] = v
        end = min(start + config.rebalance_interval, n - 1)
        seg_r = r[start:end + 1] - r[start]
        # underlying-only mark inside the window
        value[start + 1:end + 1] = v * np.exp(seg_r[1:])
        dr = np.diff(seg_r)
        var = float(np.sum(dr * np.diff(seg_r ** 2)))
        v = v * np.exp(seg_r[-1]) + v * spec.beta * (-var) - spec.fixed_leg
        value[end] = v
        if v <= 0:
            insolvent = True
            last = end
        start = end

    times = t[:last + 1]
    return BacktestResult(times=times,
                          portfolio_value=value[:last + 1],
                          underlying_value=np.exp(r[:last + 1]),
                          insolvent=insolvent)


def path_from_csv(text: str) -> ReturnPath:
    """Parse a `time,log_return` CSV (year-fraction times, '.' decimals)."""
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise DataError("empty CSV")
    header = [h.strip().lower() for h in rows[0]]
    if header != ["time", "log_return"]:
        raise DataError(f"expected header time,log_return, got {rows[0]}")
    times, rets = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 2:
            raise DataError(f"line {lineno}: expected 2 fields, got {len(row)}")
        try:
            times.append(float(row[0]))
            rets.append(float(row[1]))
        except ValueError:
            raise DataError(f"line {lineno}: malformed number in {row}")
    return ReturnPath(times=np.array(times), log_returns=np.array(rets))


def path_to_csv(path: ReturnPath) -> str:
    lines = ["time,log_return"]
    for t, r in zip(path.times, path.log_returns):
        lines.append(f"{t:.17g},{r:.17g}")
    return "\n".join(lines) + "\n"


def backtest_to_csv(result: BacktestResult) -> str:
    lines = ["time,portfolio_value,underlying_value"]
    for t, p, u in zip(result.times, result.portfolio_value,
                       result.underlying_value):
        lines.append(f"{t:.17g},{p:.17g},{u:.17g}")
    return "\n".join(lines) + "\n"
