"""
Quadrature reconstructions of x^gamma, C_gamma and Q_gamma from their
integral representations.  They share no code path with the closed forms in
:mod:`bifbm.kernels` other than the normalizing constant, and serve as
independent cross-checks.

The improper integrals all have the shape

    c_gamma * int_0^inf e^{-d y} (1 - e^{-m y}) y^{-1-gamma} dy

with d = |t - s| and m = min(s, t) (for x^gamma: d = 0, m = x).  The range
is split at ``split_point``.  Near zero the integrand is bounded by
m * y^{-gamma}, which is integrable, so a generic adaptive rule is used
there.  On the tail the integrand is truncated where the exponential bound
drops below the tolerance; when d = 0 the non-decaying ``y^{-1-gamma}`` part
is integrated in closed form instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from .errors import ConvergenceError, ParameterError
from .gram import TimeGrid
from .kernels import CGamma, QGamma, c_gamma_const

__all__ = [
    "QuadratureConfig",
    "OracleReport",
    "power_integral",
    "c_gamma_integral",
    "q_gamma_integral",
    "oracle_report",
]


@dataclass(frozen=True)
class QuadratureConfig:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 200
    split_point: float = 1.0
    # multiplies the tail truncation point; > 1 only for truncation studies
    tail_scale: float = 1.0

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ParameterError("quadrature tolerances must be positive")
        if self.max_subdivisions < 16:
            raise ParameterError("max_subdivisions must be >= 16")
        if not self.split_point > 0:
            raise ParameterError("split_point must be positive")
        if not self.tail_scale >= 1:
            raise ParameterError("tail_scale must be >= 1")


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not (0.0 < gamma < 1.0):
        raise ParameterError(f"integral representation requires 0 < gamma < 1, got {gamma!r}")
    return gamma


def _quad(f, a: float, b: float, q: QuadratureConfig, abs_tol: float | None = None) -> float:
    out = integrate.quad(
        f,
        a,
        b,
        epsabs=q.abs_tol if abs_tol is None else abs_tol,
        epsrel=q.rel_tol,
        limit=q.max_subdivisions,
        full_output=1,
    )
    if len(out) > 3:
        value, err, _, msg = out
        raise ConvergenceError(f"quadrature on [{a:g}, {b:g}] failed (est. error {err:.3g}): {msg}")
    return out[0]


def _tail_cutoff(rate: float, gamma: float, start: float, tol: float) -> float:
    """Smallest start * 2^k with int_Y^inf e^{-rate y} y^{-1-gamma} dy <= tol.

    Uses the bound e^{-rate Y} Y^{-1-gamma} / rate.
    """
    Y = start
    while math.exp(-rate * Y) * Y ** (-1.0 - gamma) / rate > tol:
        Y *= 2.0
    return Y


def _dyadic_integral(f, a: float, b: float, q: QuadratureConfig) -> float:
    """Sum of quad over [a 2^k, a 2^(k+1)] pieces covering [a, b]."""
    edges = [a]
    while edges[-1] < b:
        edges.append(min(2.0 * edges[-1], b))
    piece_tol = q.abs_tol / max(len(edges) - 1, 1)
    return math.fsum(_quad(f, lo, hi, q, piece_tol) for lo, hi in zip(edges, edges[1:]))


def _laplace_difference(d: float, m: float, gamma: float, q: QuadratureConfig) -> float:
    """int_0^inf e^{-d y} (1 - e^{-m y}) y^{-1-gamma} dy for d >= 0, m >= 0."""
    if m == 0.0:
        return 0.0
    split = q.split_point

    def integrand(y):
        return math.exp(-d * y) * -math.expm1(-m * y) * y ** (-1.0 - gamma)

    head = _quad(integrand, 0.0, split, q)
    c = c_gamma_const(gamma)
    tol = 0.5 * q.abs_tol / c
    if d > 0.0:
        Y = q.tail_scale * _tail_cutoff(d, gamma, split, tol)
        tail = _dyadic_integral(integrand, split, Y, q)
    else:
        rate = m
        Y = q.tail_scale * _tail_cutoff(rate, gamma, split, tol)
        decaying = _dyadic_integral(lambda y: math.exp(-rate * y) * y ** (-1.0 - gamma), split, Y, q)
        tail = split**-gamma / gamma - decaying
    return head + tail


def power_integral(gamma: float, x: float, q: QuadratureConfig = QuadratureConfig()) -> float:
    """x^gamma rebuilt as c_gamma * int_0^inf (1 - e^{-x y}) / y^{gamma+1} dy."""
    gamma = _check_gamma(gamma)
    x = float(x)
    if not x >= 0.0:
        raise ParameterError("x must be nonnegative")
    return c_gamma_const(gamma) * _laplace_difference(0.0, x, gamma, q)


def c_gamma_integral(gamma: float, s: float, t: float, q: QuadratureConfig = QuadratureConfig()) -> float:
    """C_gamma(s, t) = gamma * int_0^{min} (max + u)^{gamma - 1} du."""
    gamma = _check_gamma(gamma)
    lo, hi = sorted((float(s), float(t)))
    if lo < 0.0:
        raise ParameterError("times must be nonnegative")
    if lo == 0.0:
        return 0.0
    return gamma * _quad(lambda u: (hi + u) ** (gamma - 1.0), 0.0, lo, q)


def q_gamma_integral(gamma: float, s: float, t: float, q: QuadratureConfig = QuadratureConfig()) -> float:
    """Q_gamma(s, t) = c_gamma * int_0^inf e^{-|t-s| y} (1 - e^{-min y}) y^{-1-gamma} dy."""
    gamma = _check_gamma(gamma)
    lo, hi = sorted((float(s), float(t)))
    if lo < 0.0:
        raise ParameterError("times must be nonnegative")
    return c_gamma_const(gamma) * _laplace_difference(hi - lo, lo, gamma, q)


@dataclass(frozen=True)
class OracleReport:
    gamma: float
    max_abs_error: float
    max_rel_error: float
    # (kernel name, s, t) of the largest |error| / max(1, |value|)
    worst_pair: tuple[str, float, float]
    max_scaled_error: float
    n_pairs: int

    def to_dict(self):
        return {
            "gamma": self.gamma,
            "max_abs_error": self.max_abs_error,
            "max_rel_error": self.max_rel_error,
            "worst_pair": {"kernel": self.worst_pair[0], "s": self.worst_pair[1], "t": self.worst_pair[2]},
            "max_scaled_error": self.max_scaled_error,
            "n_pairs": self.n_pairs,
        }

    def passed(self, tol: float = 1e-6) -> bool:
        """|oracle - closed form| <= max(tol, tol*|value|) for every pair."""
        return self.max_scaled_error <= tol


def oracle_report(gamma: float, grid: TimeGrid, q: QuadratureConfig = QuadratureConfig()) -> OracleReport:
    """Compare closed-form C_gamma and Q_gamma with quadrature on all grid pairs."""
    gamma = _check_gamma(gamma)
    if not isinstance(grid, TimeGrid):
        grid = TimeGrid(grid)
    closed = {"cgamma": CGamma(gamma), "qgamma": QGamma(gamma)}
    oracle = {"cgamma": c_gamma_integral, "qgamma": q_gamma_integral}
    t = grid.to_list()
    max_abs = max_rel = max_scaled = 0.0
    worst = ("", math.nan, math.nan)
    n = 0
    for i, s_i in enumerate(t):
        for t_j in t[i:]:
            for name in ("cgamma", "qgamma"):
                exact = float(closed[name](s_i, t_j))
                try:
                    approx = oracle[name](gamma, s_i, t_j, q)
                except ConvergenceError as exc:
                    raise ConvergenceError(f"{name} at (s={s_i!r}, t={t_j!r}): {exc}") from exc
                err = abs(approx - exact)
                scaled = err / max(1.0, abs(exact))
                max_abs = max(max_abs, err)
                if exact != 0.0:
                    max_rel = max(max_rel, err / abs(exact))
                if scaled > max_scaled or n == 0:
                    max_scaled = max(scaled, max_scaled)
                    worst = (name, s_i, t_j)
                n += 1
    return OracleReport(gamma, max_abs, max_rel, worst, max_scaled, n)

