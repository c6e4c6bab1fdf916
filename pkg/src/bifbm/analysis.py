"""
Structural checks on the bifBm covariance and on sampled paths:
self-similarity, Lamperti stationarity, quasihelix bounds, the small-lag
increment limit, realized p-variation and the gamma > 1 counterexample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NumericError, ParameterError
from .gram import TimeGrid
from .kernels import BifBm, FBm, in_theorem_region

__all__ = [
    "DeviationReport",
    "QuasihelixReport",
    "self_similarity_deviation",
    "lamperti_cov",
    "lamperti_stationarity",
    "quasihelix_report",
    "increment_limit_error",
    "p_variation",
    "variogram_slope",
    "f_counterexample",
    "find_negative_a",
]


@dataclass(frozen=True)
class DeviationReport:
    max_abs_deviation: float
    argmax: tuple[float, float]
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_abs_deviation <= self.tolerance

    def to_dict(self):
        return {
            "max_abs_deviation": self.max_abs_deviation,
            "argmax": list(self.argmax),
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def _grid(grid) -> TimeGrid:
    return grid if isinstance(grid, TimeGrid) else TimeGrid(grid)


def self_similarity_deviation(H: float, K: float, a: float, grid, tolerance: float = 1e-12) -> DeviationReport:
    """max |R(as, at) - a^2HK R(s, t)| / (a^2HK (1 + |R(s, t)|)) over grid pairs."""
    if not a > 0:
        raise ParameterError("scale factor a must be positive")
    R = BifBm(H, K)
    t = _grid(grid).times
    S, T = np.meshgrid(t, t, indexing="ij")
    base = R(S, T)
    w = a ** (2 * H * K)
    dev = np.abs(R(a * S, a * T) - w * base) / (w * (1.0 + np.abs(base)))
    i, j = np.unravel_index(np.argmax(dev), dev.shape)
    return DeviationReport(float(dev[i, j]), (float(t[i]), float(t[j])), tolerance)


def lamperti_cov(H: float, K: float, u: float, v: float) -> float:
    """Covariance e^{-HK(u+v)} R(e^u, e^v) of the Lamperti transform.

    Switches to the log-space form when e^u or e^v would overflow or
    underflow the kernel evaluation.
    """
    R = BifBm(H, K)
    hk = R.H * R.K
    hi, lo = max(u, v), min(u, v)
    if 2 * R.H * max(abs(hi), abs(lo)) < 600.0:
        return float(math.exp(-hk * (u + v)) * R(math.exp(u), math.exp(v)))
    lag = hi - lo
    # R(e^hi, e^lo) = 2^-K e^{2HK hi} [(1 + e^{-2H lag})^K - (1 - e^{-lag})^{2HK}]
    head = math.exp(R.K * math.log1p(math.exp(-2 * R.H * lag)))
    tail = (-math.expm1(-lag)) ** (2 * hk) if lag > 0 else 0.0
    return 2.0**-R.K * math.exp(hk * lag) * (head - tail)


def lamperti_stationarity(
    H: float,
    K: float,
    lags: Sequence[float],
    bases: Sequence[float],
    tolerance: float = 1e-10,
) -> DeviationReport:
    """max over lags l and bases u of |cov(u + l, u) - cov(l, 0)|; argmax is (l, u)."""
    if len(lags) == 0 or len(bases) == 0:
        raise ParameterError("lags and bases must be nonempty")
    worst, where = -1.0, (math.nan, math.nan)
    for lag in lags:
        ref = lamperti_cov(H, K, lag, 0.0)
        for u in bases:
            d = abs(lamperti_cov(H, K, u + lag, u) - ref)
            if d > worst:
                worst, where = d, (float(lag), float(u))
    return DeviationReport(worst, where, tolerance)


@dataclass(frozen=True)
class QuasihelixReport:
    min_ratio: float
    max_ratio: float
    lower: float
    upper: float
    slack: float

    @property
    def passed(self) -> bool:
        return self.min_ratio >= self.lower - self.slack and self.max_ratio <= self.upper + self.slack

    def to_dict(self):
        return {
            "min_ratio": self.min_ratio,
            "max_ratio": self.max_ratio,
            "lower": self.lower,
            "upper": self.upper,
            "pass": self.passed,
        }


def quasihelix_report(H: float, K: float, grid, slack: float = 1e-12) -> QuasihelixReport:
    """Increment variance over |t - s|^2HK for every pair of distinct grid points.

    Passes when all ratios lie in [2^-K, 2^(1-K)] up to ``slack``.
    """
    if not in_theorem_region(H, K):
        raise ParameterError(f"(H={H}, K={K}) outside 0 < K <= 1, 2HK <= 1")
    t = _grid(grid).times
    if t.size < 2:
        raise ParameterError("need at least two grid points")
    R = BifBm(H, K)
    i, j = np.triu_indices(t.size, k=1)
    s, u = t[i], t[j]
    incr = R(s, s) + R(u, u) - 2.0 * R(s, u)
    ratio = incr / np.power(u - s, 2 * H * K)
    return QuasihelixReport(float(ratio.min()), float(ratio.max()), 2.0**-K, 2.0 ** (1 - K), slack)


def increment_limit_error(H: float, K: float, T: float, grid) -> float:
    """sup over grid pairs of |2^(K-1) Cov(X_{T+t} - X_T, X_{T+s} - X_T) - S_HK(s, t)|.

    Covariance-level form of the convergence of the rescaled increment
    process to fBm with index HK as T grows.
    """
    if not in_theorem_region(H, K):
        raise ParameterError(f"(H={H}, K={K}) outside 0 < K <= 1, 2HK <= 1")
    if not T > 0:
        raise ParameterError("T must be positive")
    R = BifBm(H, K)
    S = FBm(H * K)
    t = _grid(grid).times
    a, b = np.meshgrid(t, t, indexing="ij")
    cov = R(T + a, T + b) - R(T + a, T) - R(T, T + b) + R(T, T)
    return float(np.max(np.abs(2.0 ** (K - 1) * cov - S(a, b))))


def p_variation(path, grid, p: float, levels: int) -> np.ndarray:
    """Realized p-variation sums on dyadic sub-partitions.

    ``grid`` must be uniform with ``2**levels + 1`` points.  Entry ``k`` of the
    result (k = 0..levels) uses the ``2**k`` increments of stride
    ``2**(levels - k)``.
    """
    if p <= 0:
        raise ParameterError("p must be positive")
    t = _grid(grid).times
    x = np.asarray(path, dtype=float).ravel()
    if t.size != 2**levels + 1 or x.size != t.size:
        raise ParameterError(f"need 2**levels + 1 = {2**levels + 1} grid points and path values")
    steps = np.diff(t)
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise ParameterError("p_variation requires a uniform grid")
    return np.array([np.sum(np.abs(np.diff(x[:: 2 ** (levels - k)])) ** p) for k in range(levels + 1)])


def variogram_slope(values, grid, lags: Sequence[int] = (1, 2, 4, 8, 16)) -> float:
    """Regularity index from the log-log slope of the mean squared increment.

    ``values`` is (n_paths, n_times) on a uniform grid; returns slope / 2,
    which estimates HK for bifBm.  Deliberately crude.
    """
    X = np.atleast_2d(np.asarray(values, dtype=float))
    t = _grid(grid).times
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0):
        raise ParameterError("variogram_slope requires a uniform grid")
    lags = [int(k) for k in lags if 0 < k < t.size]
    if len(lags) < 2:
        raise ParameterError("need at least two usable lags")
    v = [np.mean((X[:, k:] - X[:, :-k]) ** 2) for k in lags]
    slope = np.polyfit(np.log(np.array(lags) * dt[0]), np.log(v), 1)[0]
    return float(slope / 2.0)


def f_counterexample(gamma: float, a: float) -> float:
    """1 + 2 a^gamma - (1 + a)^gamma, i.e. Q(1,1) + Q(1+a,1+a) - 2 Q(1,1+a).

    Evaluated as 2a^gamma - expm1(gamma log1p(a)) so that small negative
    values near a = 0 are resolved.
    """
    if not gamma > 0:
        raise ParameterError("gamma must be positive")
    if a < 0:
        raise ParameterError("a must be nonnegative")
    if a == 0:
        return 0.0
    return 2.0 * a**gamma - math.expm1(gamma * math.log1p(a))


def find_negative_a(gamma: float, threshold: float = -1e-15) -> float:
    """First a = 2^-k, k = 1..60, with f_counterexample(gamma, a) < threshold."""
    if not gamma > 1:
        raise ParameterError(f"a negative witness exists only for gamma > 1, got {gamma}")
    for k in range(1, 61):
        a = 2.0**-k
        if f_counterexample(gamma, a) < threshold:
            return a
    raise NumericError(f"no negative value of f found down to a = 2^-60 for gamma={gamma}")

