"""
Gram matrices on time grids, numerical nonnegative-definiteness and a
jittered Cholesky factorization.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GridError, NotPSDError, NumericError, ParameterError
from .kernels import KernelSpec

__all__ = [
    "TimeGrid",
    "GramMatrix",
    "Verdict",
    "PSDReport",
    "build_gram",
    "min_eigenvalue",
    "psd_check",
    "cholesky_psd",
    "DEFAULT_REL_TOL",
    "DEFAULT_JITTER",
]

DEFAULT_REL_TOL = 1e-10
# multiplied by the matrix scale (max diagonal entry)
DEFAULT_JITTER = (0.0, 1e-14, 1e-12, 1e-10)


@dataclass(frozen=True, eq=False)
class TimeGrid:
    """Strictly increasing, nonnegative, nonempty sequence of times."""

    times: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float).ravel()
        if t.size == 0:
            raise GridError("time grid must contain at least one point")
        if not np.all(np.isfinite(t)):
            raise GridError("time grid contains non-finite values")
        if t[0] < 0.0:
            raise GridError(f"time grid must be nonnegative, got {t[0]!r}")
        if np.any(np.diff(t) <= 0.0):
            raise GridError("time grid must be strictly increasing without duplicates")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    def __len__(self):
        return self.times.size

    def __iter__(self):
        return iter(self.times.tolist())

    def __getitem__(self, i):
        return self.times[i]

    def __eq__(self, other):
        return isinstance(other, TimeGrid) and np.array_equal(self.times, other.times)

    def __hash__(self):
        return hash(self.times.tobytes())

    @classmethod
    def uniform(cls, a: float, b: float, n: int) -> "TimeGrid":
        """n equally spaced points from a to b inclusive."""
        if n < 1:
            raise GridError("n must be >= 1")
        if n == 1:
            return cls([a])
        return cls(np.linspace(a, b, int(n)))

    @classmethod
    def geometric(cls, a: float, b: float, n: int) -> "TimeGrid":
        """n geometrically spaced points from a > 0 to b inclusive."""
        if a <= 0.0:
            raise GridError("geometric grid needs a positive start")
        if n < 1:
            raise GridError("n must be >= 1")
        if n == 1:
            return cls([a])
        return cls(np.geomspace(a, b, int(n)))

    @classmethod
    def parse(cls, text: str) -> "TimeGrid":
        """Parse ``uniform:a:b:n``, ``geom:a:b:n`` or ``list:t1,t2,...``."""
        kind, _, rest = text.partition(":")
        try:
            if kind == "list":
                return cls([float(x) for x in rest.split(",") if x.strip()])
            if kind in ("uniform", "geom"):
                a, b, n = rest.split(":")
                make = cls.uniform if kind == "uniform" else cls.geometric
                return make(float(a), float(b), int(n))
        except ValueError as exc:
            if isinstance(exc, GridError):
                raise
            raise GridError(f"malformed grid {text!r}: {exc}") from None
        raise GridError(f"unknown grid kind in {text!r}; use uniform:, geom: or list:")

    def union(self, other: "TimeGrid") -> "TimeGrid":
        return TimeGrid(np.union1d(self.times, other.times))

    def to_list(self) -> list[float]:
        return self.times.tolist()


@dataclass(frozen=True, eq=False)
class GramMatrix:
    values: np.ndarray
    spec: KernelSpec
    grid: TimeGrid

    @property
    def scale(self) -> float:
        """Largest diagonal entry (process variance scale)."""
        return float(np.max(np.diag(self.values)))

    def __len__(self):
        return self.values.shape[0]


class Verdict(str, enum.Enum):
    PSD = "PSD"
    NOT_PSD = "NotPSD"


@dataclass(frozen=True)
class PSDReport:
    min_eigenvalue: float
    scale: float
    rel_tol: float
    verdict: Verdict

    @property
    def is_psd(self) -> bool:
        return self.verdict is Verdict.PSD

    def to_dict(self):
        return {
            "min_eigenvalue": self.min_eigenvalue,
            "scale": self.scale,
            "rel_tol": self.rel_tol,
            "verdict": self.verdict.value,
        }


def build_gram(spec: KernelSpec, grid: TimeGrid | Sequence[float]) -> GramMatrix:
    """Pairwise kernel values on ``grid``; upper triangle computed and mirrored."""
    if not isinstance(grid, TimeGrid):
        grid = TimeGrid(grid)
    t = grid.times
    n = t.size
    iu, ju = np.triu_indices(n)
    upper = np.asarray(spec(t[iu], t[ju]), dtype=float)
    values = np.empty((n, n))
    values[iu, ju] = upper
    values[ju, iu] = upper
    values.setflags(write=False)
    return GramMatrix(values, spec, grid)


def _as_array(G) -> np.ndarray:
    a = G.values if isinstance(G, GramMatrix) else np.asarray(G, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ParameterError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericError("matrix contains non-finite entries")
    return a


def min_eigenvalue(G) -> float:
    """Smallest eigenvalue via LAPACK's symmetric eigensolver (backward stable)."""
    a = _as_array(G)
    return float(np.linalg.eigvalsh(a)[0])


def psd_check(G, rel_tol: float = DEFAULT_REL_TOL) -> PSDReport:
    """PSD iff min eigenvalue >= -rel_tol * max(scale, 1), scale = max diagonal."""
    if rel_tol < 0:
        raise ParameterError("rel_tol must be >= 0")
    a = _as_array(G)
    lam = min_eigenvalue(a)
    scale = float(np.max(np.diag(a)))
    ok = lam >= -rel_tol * max(scale, 1.0)
    return PSDReport(lam, scale, float(rel_tol), Verdict.PSD if ok else Verdict.NOT_PSD)


def cholesky_psd(G, jitter_schedule: Sequence[float] | None = None) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``G + eps*I`` for the first eps that works.

    The default schedule is ``DEFAULT_JITTER`` times the matrix scale.  An
    explicit schedule is used verbatim (absolute values).
    """
    a = _as_array(G)
    scale = float(np.max(np.diag(a))) if a.size else 0.0
    if jitter_schedule is None:
        jitter_schedule = [j * max(scale, np.finfo(float).tiny) for j in DEFAULT_JITTER]
    schedule = [float(j) for j in jitter_schedule]
    if not schedule or any(j < 0 for j in schedule) or any(b < a_ for a_, b in zip(schedule, schedule[1:])):
        raise ParameterError("jitter schedule must be nonempty, nonnegative and increasing")
    eye = np.eye(a.shape[0])
    for eps in schedule:
        try:
            L = np.linalg.cholesky(a + eps * eye if eps else a)
        except np.linalg.LinAlgError:
            continue
        if np.all(np.isfinite(L)):
            return L, eps
    lam = min_eigenvalue(a)
    raise NotPSDError(
        f"Cholesky failed for all jitter levels up to {schedule[-1]:.3g}; min eigenvalue {lam:.6g}",
        min_eigenvalue=lam,
    )


def gram_scale(G) -> float:
    return float(np.max(np.diag(_as_array(G))))

