"""
Numerical map of the (H, K) plane: where are bifBm Gram matrices PSD on a
given grid, and where does PSD break down for fixed H.

A finite grid can only certify failure.  A PSD verdict means "no violation
seen on this grid", which is why every result carries its grid.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BifbmError, ParameterError
from .gram import DEFAULT_REL_TOL, TimeGrid, Verdict, build_gram, psd_check
from .kernels import BifBm

__all__ = [
    "default_grid",
    "RegionScan",
    "CriticalKEstimate",
    "scan_region",
    "critical_k",
    "hk_trend",
    "COARSE_STEP",
]

COARSE_STEP = 0.02


def default_grid() -> TimeGrid:
    """24 geometric points on [2^-6, 2^6] plus t = 1000."""
    return TimeGrid(np.append(np.geomspace(2.0**-6, 2.0**6, 24), 1000.0))


def _cell(H: float, K: float, grid: TimeGrid, rel_tol: float) -> tuple[float, Verdict | None, str]:
    try:
        report = psd_check(build_gram(BifBm(H, K), grid), rel_tol)
    except BifbmError as exc:
        return float("nan"), None, str(exc)
    return report.min_eigenvalue, report.verdict, ""


def _map(fn, items, threads: int) -> list:
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True, eq=False)
class RegionScan:
    H: np.ndarray
    K: np.ndarray
    grid: TimeGrid
    min_eigs: np.ndarray
    # Verdict per cell, None where evaluation failed (see errors)
    verdicts: np.ndarray
    errors: dict = field(default_factory=dict)

    def rows(self):
        """(H, K, min_eig, verdict) rows in H-major order."""
        for i, h in enumerate(self.H):
            for j, k in enumerate(self.K):
                v = self.verdicts[i, j]
                yield float(h), float(k), float(self.min_eigs[i, j]), v.value if v is not None else "Error"


def scan_region(
    H_range: tuple[float, float],
    K_range: tuple[float, float],
    steps: tuple[int, int],
    grid: TimeGrid | None = None,
    rel_tol: float = DEFAULT_REL_TOL,
    threads: int = 1,
) -> RegionScan:
    """Min eigenvalue and PSD verdict of the bifBm Gram on an (H, K) lattice.

    Cells that fail numerically are marked and the scan goes on.
    """
    (h0, h1), (k0, k1) = H_range, K_range
    nh, nk = steps
    if min(h0, h1, k0, k1) <= 0:
        raise ParameterError("H and K ranges must be positive")
    if nh < 2 or nk < 2:
        raise ParameterError("steps must be >= 2 in each direction")
    grid = default_grid() if grid is None else grid
    Hs = np.linspace(h0, h1, nh)
    Ks = np.linspace(k0, k1, nk)
    cells = [(float(h), float(k)) for h in Hs for k in Ks]
    results = _map(lambda hk: _cell(hk[0], hk[1], grid, rel_tol), cells, threads)
    min_eigs = np.array([r[0] for r in results]).reshape(nh, nk)
    verdicts = np.empty((nh, nk), dtype=object)
    errors = {}
    for idx, (cell, r) in enumerate(zip(cells, results)):
        verdicts.flat[idx] = r[1]
        if r[2]:
            errors[cell] = r[2]
    return RegionScan(Hs, Ks, grid, min_eigs, verdicts, errors)


@dataclass(frozen=True, eq=False)
class CriticalKEstimate:
    H: float
    K_low: float | None
    K_high: float | None
    grid: TimeGrid
    bisection_iterations: int
    status: str
    # (last PSD K, first NotPSD K) or the reverse, for every coarse sign change
    transitions: tuple[tuple[float, float], ...] = ()

    @property
    def K_mid(self) -> float | None:
        if self.K_low is None or self.K_high is None:
            return None
        return 0.5 * (self.K_low + self.K_high)

    def to_dict(self):
        return {
            "H": self.H,
            "K_low": self.K_low,
            "K_high": self.K_high,
            "K_mid": self.K_mid,
            "bisection_iterations": self.bisection_iterations,
            "status": self.status,
            "transitions": [list(t) for t in self.transitions],
            "grid": self.grid.to_list(),
        }


def critical_k(
    H: float,
    grid: TimeGrid | None = None,
    resolution: float = 1e-3,
    rel_tol: float = DEFAULT_REL_TOL,
    K_max: float | None = None,
    threads: int = 1,
) -> CriticalKEstimate:
    """Bracket the smallest K above 1/(2H) at which the Gram stops being PSD.

    A coarse scan in steps of ``COARSE_STEP`` runs from 1/(2H) to ``K_max``
    (default 1/H + 0.1).  With exactly one PSD -> NotPSD change the bracket
    is refined by bisection to width <= ``resolution``.  Several changes are
    reported as they are, without bisection.
    """
    if not resolution > 0:
        raise ParameterError("resolution must be positive")
    if not H > 0:
        raise ParameterError("H must be positive")
    grid = default_grid() if grid is None else grid
    k_start = 1.0 / (2.0 * H)
    k_stop = 1.0 / H + 0.1 if K_max is None else float(K_max)
    n = int(np.floor((k_stop - k_start) / COARSE_STEP + 1e-9)) + 1
    Ks = [k_start + i * COARSE_STEP for i in range(n)]
    psd = [v is Verdict.PSD for _, v, _ in _map(lambda k: _cell(H, k, grid, rel_tol), Ks, threads)]

    changes = [(Ks[i], Ks[i + 1]) for i in range(n - 1) if psd[i] != psd[i + 1]]
    if not psd[0]:
        return CriticalKEstimate(H, None, Ks[0], grid, 0, "not PSD at scan start", tuple(changes))
    if not changes:
        return CriticalKEstimate(H, Ks[-1], None, grid, 0, "no transition detected on this grid")
    if len(changes) > 1:
        return CriticalKEstimate(H, None, None, grid, 0, "non-monotone in K; transitions reported", tuple(changes))

    lo, hi = changes[0]
    iters = 0
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if _cell(H, mid, grid, rel_tol)[1] is Verdict.PSD:
            lo = mid
        else:
            hi = mid
        iters += 1
    return CriticalKEstimate(H, lo, hi, grid, iters, "bracketed", tuple(changes))


def hk_trend(
    H_list: Sequence[float],
    grid: TimeGrid | None = None,
    resolution: float = 1e-3,
    rel_tol: float = DEFAULT_REL_TOL,
    threads: int = 1,
) -> list[tuple[float, float | None, CriticalKEstimate]]:
    """(H, 2 H K_mid, estimate) for each H; observational output only."""
    H_list = [float(h) for h in H_list]
    if any(h <= 1 for h in H_list):
        raise ParameterError("hk_trend expects H values > 1")
    if any(b <= a for a, b in zip(H_list, H_list[1:])):
        raise ParameterError("H values must be increasing")
    estimates = _map(lambda h: critical_k(h, grid, resolution, rel_tol), H_list, threads)
    return [(e.H, None if e.K_mid is None else 2.0 * e.H * e.K_mid, e) for e in estimates]
