"""
Closed-form covariance kernels of the bifractional Brownian motion family.

Every kernel is a frozen dataclass that can be called on scalars or numpy
arrays (broadcast as usual).  Arguments are canonically ordered so that
``k(s, t)`` and ``k(t, s)`` perform exactly the same floating point
operations; symmetry is therefore bit-exact.

Kernels compose:

>>> k = Scale(TimeChange(CGamma(0.25), 4.0), 2 ** -0.25) + Scale(QGamma(1.0), 2 ** -0.25)
>>> abs(eval_kernel(k, 1.0, 2.0) - eval_kernel(BifBm(2.0, 0.25), 1.0, 2.0)) < 1e-14
True
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import ParameterError

__all__ = [
    "KernelSpec",
    "BifBm",
    "FBm",
    "CGamma",
    "QGamma",
    "LeiNualartRemainder",
    "MinKernel",
    "TimeChange",
    "Scale",
    "Sum",
    "eval_kernel",
    "increment_variance",
    "Region",
    "ParamVerdict",
    "classify_params",
    "c_gamma_const",
    "in_theorem_region",
]

# slack for boundary comparisons such as 2HK <= 1 when K = 1/(2H) is rounded
_BOUNDARY_RTOL = 1e-12


def _check_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ParameterError(f"{name} must be a positive finite number, got {value!r}")
    return value


def _pow(x, p: float):
    """x**p for x >= 0 and p > 0, with 0**p = 0 and no warnings."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.power(x, p)
    return np.where(x > 0.0, out, 0.0)


def _ratio(lo, hi):
    """lo / hi with 0/0 -> 0 (only reached on the s = t = 0 corner)."""
    safe = np.where(hi > 0.0, hi, 1.0)
    return np.where(hi > 0.0, lo / safe, 0.0)


def _unwrap(x):
    return float(x) if np.ndim(x) == 0 else x


class KernelSpec:
    """Base class: subclasses implement ``_ordered(lo, hi)`` with ``lo <= hi``."""

    def __call__(self, s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        return _unwrap(self._ordered(np.minimum(s, t), np.maximum(s, t)))

    def _ordered(self, lo, hi):  # pragma: no cover - abstract
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError

    def __add__(self, other: "KernelSpec") -> "Sum":
        if not isinstance(other, KernelSpec):
            return NotImplemented
        return Sum(self, other)

    def __mul__(self, c: float) -> "Scale":
        return Scale(self, c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class BifBm(KernelSpec):
    """Bifractional Brownian motion covariance

        R(s, t) = 2^-K ((t^2H + s^2H)^K - |t - s|^2HK).

    Any H, K > 0 is accepted; whether the result is a covariance is
    answered by :func:`classify_params`, not here.
    """

    H: float
    K: float

    def __post_init__(self):
        object.__setattr__(self, "H", _check_positive("H", self.H))
        object.__setattr__(self, "K", _check_positive("K", self.K))

    def _ordered(self, lo, hi):
        H, K = self.H, self.K
        r = _pow(_ratio(lo, hi), 2 * H)
        # (hi^2H + lo^2H)^K / 2^K written as hi^2HK ((1 + r)/2)^K: no overflow,
        # and the diagonal reduces to hi^2HK exactly
        head = _pow(hi, 2 * H * K) * np.power(0.5 * (1.0 + r), K)
        return head - 2.0**-K * _pow(hi - lo, 2 * H * K)

    def to_dict(self):
        return {"kernel": "bifbm", "H": self.H, "K": self.K}


@dataclass(frozen=True)
class FBm(KernelSpec):
    """Fractional Brownian motion covariance with Hurst index H in (0, 1]."""

    H: float

    def __post_init__(self):
        H = _check_positive("H", self.H)
        if H > 1.0:
            raise ParameterError(f"fBm requires 0 < H <= 1, got H={H}")
        object.__setattr__(self, "H", H)

    def _ordered(self, lo, hi):
        p = 2 * self.H
        return 0.5 * (_pow(lo, p) + _pow(hi, p) - _pow(hi - lo, p))

    def to_dict(self):
        return {"kernel": "fbm", "H": self.H}


@dataclass(frozen=True)
class CGamma(KernelSpec):
    """(s + t)^gamma - max(s, t)^gamma.  gamma > 1 is allowed (not PSD-checked)."""

    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "gamma", _check_positive("gamma", self.gamma))

    def _ordered(self, lo, hi):
        g = self.gamma
        if g == 1.0:
            return lo + 0.0 * hi
        # hi^g ((1 + lo/hi)^g - 1) avoids cancellation when lo << hi
        return _pow(hi, g) * np.expm1(g * np.log1p(_ratio(lo, hi)))

    def to_dict(self):
        return {"kernel": "cgamma", "gamma": self.gamma}


@dataclass(frozen=True)
class QGamma(KernelSpec):
    """max(s, t)^gamma - |t - s|^gamma; nonnegative definite iff gamma <= 1."""

    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "gamma", _check_positive("gamma", self.gamma))

    def _ordered(self, lo, hi):
        g = self.gamma
        if g == 1.0:
            return lo + 0.0 * hi
        return _pow(hi, g) - _pow(hi - lo, g)

    def to_dict(self):
        return {"kernel": "qgamma", "gamma": self.gamma}


@dataclass(frozen=True)
class LeiNualartRemainder(KernelSpec):
    """(s^2HK + t^2HK - (t^2H + s^2H)^K) / 2, the fBm-minus-bifBm remainder."""

    H: float
    K: float

    def __post_init__(self):
        object.__setattr__(self, "H", _check_positive("H", self.H))
        K = _check_positive("K", self.K)
        if K > 1.0:
            raise ParameterError(f"remainder kernel requires 0 < K <= 1, got K={K}")
        object.__setattr__(self, "K", K)

    def _ordered(self, lo, hi):
        H, K = self.H, self.K
        r = _pow(_ratio(lo, hi), 2 * H)
        return 0.5 * (_pow(lo, 2 * H * K) - _pow(hi, 2 * H * K) * np.expm1(K * np.log1p(r)))

    def to_dict(self):
        return {"kernel": "lei-nualart", "H": self.H, "K": self.K}


@dataclass(frozen=True)
class MinKernel(KernelSpec):
    """Brownian motion covariance min(s, t)."""

    def _ordered(self, lo, hi):
        return lo + 0.0 * hi

    def to_dict(self):
        return {"kernel": "min"}


@dataclass(frozen=True)
class TimeChange(KernelSpec):
    """base(s^theta, t^theta)."""

    base: KernelSpec
    theta: float

    def __post_init__(self):
        if not isinstance(self.base, KernelSpec):
            raise ParameterError("TimeChange base must be a KernelSpec")
        object.__setattr__(self, "theta", _check_positive("theta", self.theta))

    def _ordered(self, lo, hi):
        return self.base._ordered(_pow(lo, self.theta), _pow(hi, self.theta))

    def to_dict(self):
        return {"kernel": "timechange", "theta": self.theta, "base": self.base.to_dict()}


@dataclass(frozen=True)
class Scale(KernelSpec):
    """c * base(s, t) with c >= 0."""

    base: KernelSpec
    c: float

    def __post_init__(self):
        if not isinstance(self.base, KernelSpec):
            raise ParameterError("Scale base must be a KernelSpec")
        c = float(self.c)
        if not math.isfinite(c) or c < 0.0:
            raise ParameterError(f"scale factor must be finite and >= 0, got {c!r}")
        object.__setattr__(self, "c", c)

    def _ordered(self, lo, hi):
        return self.c * self.base._ordered(lo, hi)

    def to_dict(self):
        return {"kernel": "scale", "c": self.c, "base": self.base.to_dict()}


@dataclass(frozen=True)
class Sum(KernelSpec):
    left: KernelSpec
    right: KernelSpec

    def __post_init__(self):
        if not (isinstance(self.left, KernelSpec) and isinstance(self.right, KernelSpec)):
            raise ParameterError("Sum operands must be KernelSpec instances")

    def _ordered(self, lo, hi):
        return self.left._ordered(lo, hi) + self.right._ordered(lo, hi)

    def to_dict(self):
        return {"kernel": "sum", "left": self.left.to_dict(), "right": self.right.to_dict()}


def _check_time(name: str, x: float) -> float:
    x = float(x)
    if not math.isfinite(x) or x < 0.0:
        raise ParameterError(f"{name} must be a finite nonnegative time, got {x!r}")
    return x


def eval_kernel(spec: KernelSpec, s: float, t: float) -> float:
    """Evaluate ``spec`` at a single pair of nonnegative times."""
    if not isinstance(spec, KernelSpec):
        raise ParameterError(f"not a kernel spec: {spec!r}")
    return float(spec(_check_time("s", s), _check_time("t", t)))


def increment_variance(spec: KernelSpec, s: float, t: float) -> float:
    """E|X(t) - X(s)|^2 = k(s,s) + k(t,t) - 2 k(s,t)."""
    return eval_kernel(spec, s, s) + eval_kernel(spec, t, t) - 2.0 * eval_kernel(spec, s, t)


class Region(str, enum.Enum):
    THEOREM = "TheoremRegion"
    OTHER_KNOWN = "OtherKnownRegion"
    NECESSARY_VIOLATED = "NecessaryViolated"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class ParamVerdict:
    label: Region
    explanation: str


def _le(a: float, b: float) -> bool:
    return a <= b * (1.0 + _BOUNDARY_RTOL)


def in_theorem_region(H: float, K: float) -> bool:
    """0 < K <= 1 and 2HK <= 1 (boundary compared with a 1e-12 relative slack)."""
    return H > 0 and 0 < K and _le(K, 1.0) and _le(2 * H * K, 1.0)


def classify_params(H: float, K: float) -> ParamVerdict:
    """Place (H, K) in the known existence map of bifBm.

    Labels are tested in precedence order TheoremRegion, OtherKnownRegion,
    NecessaryViolated, Unknown.  For H < 1/2 and 2 < K <= 1/H no result is
    known, and the verdict is Unknown.
    """
    H = _check_positive("H", H)
    K = _check_positive("K", K)
    if in_theorem_region(H, K):
        return ParamVerdict(Region.THEOREM, "0 < K <= 1 and 2HK <= 1: decomposition into C and Q parts applies")
    if H <= 1.0 and _le(K, min(2.0, 1.0 / H)):
        return ParamVerdict(Region.OTHER_KNOWN, "0 < H <= 1 and K <= min(2, 1/H): classical extended range")
    if H > 1.0 and math.isclose(K, 1.0 / (2.0 * H), rel_tol=_BOUNDARY_RTOL):
        return ParamVerdict(Region.OTHER_KNOWN, "H > 1 and K = 1/(2H)")
    if K > (1.0 / H) * (1.0 + _BOUNDARY_RTOL):
        return ParamVerdict(
            Region.NECESSARY_VIOLATED,
            "K > 1/H: Cauchy-Schwarz fails for R(1, t) as t grows",
        )
    return ParamVerdict(Region.UNKNOWN, "no proof of nonnegative definiteness or of its failure is known")


def c_gamma_const(gamma: float) -> float:
    """Normalizing constant gamma / Gamma(1 - gamma) for 0 < gamma < 1."""
    gamma = float(gamma)
    if not (0.0 < gamma < 1.0):
        raise ParameterError(f"c_gamma requires 0 < gamma < 1, got {gamma!r}")
    return gamma / math.gamma(1.0 - gamma)
