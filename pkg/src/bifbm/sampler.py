"""
Exact Gaussian path simulation on finite grids.

Paths are ``L z`` with ``L`` a (jittered) Cholesky factor of the Gram
matrix and ``z`` drawn from the per-path substreams of :mod:`bifbm.rng`.
Work is cut into fixed chunks of ``CHUNK_PATHS`` paths; the chunking never
depends on the thread count, so output is bit-identical for any
``threads``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NotPSDError, ParameterError
from .gram import DEFAULT_REL_TOL, TimeGrid, build_gram, cholesky_psd, psd_check
from .kernels import BifBm, CGamma, FBm, KernelSpec, MinKernel, QGamma, Scale, Sum, TimeChange, in_theorem_region
from .rng import SeedSpec

__all__ = [
    "CHUNK_PATHS",
    "SamplePaths",
    "sample_gaussian",
    "sample_brownian",
    "sample_bifbm_sum",
    "sample_fbm_decomposed",
    "empirical_covariance",
    "bifbm_decomposition",
]

CHUNK_PATHS = 4096

# substream ids; the direct sampler always uses its SeedSpec stream as given
STREAM_FIRST = 1
STREAM_SECOND = 2


@dataclass(frozen=True, eq=False)
class SamplePaths:
    values: np.ndarray
    grid: TimeGrid
    spec: KernelSpec
    master_seed: int
    jitter: float = 0.0
    components: tuple["SamplePaths", ...] = field(default=(), repr=False)

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    def metadata(self) -> dict:
        return {
            "master_seed": int(self.master_seed),
            "n_paths": self.n_paths,
            "n_times": len(self.grid),
            "times": self.grid.to_list(),
            "kernel": self.spec.to_dict(),
            "jitter": self.jitter,
            "rng": "philox4x64 counter-based, key=seed+2^64*stream, inversion normals",
        }


def _check_n_paths(n_paths: int) -> int:
    if int(n_paths) != n_paths or n_paths < 1:
        raise ParameterError(f"n_paths must be a positive integer, got {n_paths!r}")
    return int(n_paths)


def _chunks(n_paths: int):
    return [(a, min(a + CHUNK_PATHS, n_paths)) for a in range(0, n_paths, CHUNK_PATHS)]


def _run_chunks(work, n_paths: int, threads: int) -> list:
    chunks = _chunks(n_paths)
    if threads <= 1 or len(chunks) == 1:
        return [work(a, b) for a, b in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda ab: work(*ab), chunks))


def _apply_lower(z: np.ndarray, L: np.ndarray) -> np.ndarray:
    """z @ L.T accumulated column by column in a fixed order.

    Avoids BLAS, whose summation order may depend on blocking and threads.
    """
    out = np.zeros_like(z)
    for k in range(L.shape[0]):
        out[:, k:] += z[:, k, None] * L[k:, k]
    return out


def _with_zero_column(grid: TimeGrid, inner: np.ndarray) -> np.ndarray:
    if grid.times[0] == 0.0:
        return np.hstack([np.zeros((inner.shape[0], 1)), inner])
    return inner


def sample_gaussian(
    spec: KernelSpec,
    grid: TimeGrid,
    n_paths: int,
    seed: SeedSpec = SeedSpec(),
    threads: int = 1,
    rel_tol: float = DEFAULT_REL_TOL,
) -> SamplePaths:
    """Centered Gaussian paths with covariance ``spec`` on ``grid``.

    A grid point at t = 0 is dropped from the factorization and its column
    filled with exact zeros.
    """
    n_paths = _check_n_paths(n_paths)
    if not isinstance(grid, TimeGrid):
        grid = TimeGrid(grid)
    positive = grid.times[grid.times > 0.0]
    if positive.size == 0:
        return SamplePaths(np.zeros((n_paths, 1)), grid, spec, seed.master_seed)
    G = build_gram(spec, TimeGrid(positive))
    report = psd_check(G, rel_tol)
    if not report.is_psd:
        raise NotPSDError(
            f"Gram matrix is not PSD (min eigenvalue {report.min_eigenvalue:.6g}, scale {report.scale:.6g})",
            min_eigenvalue=report.min_eigenvalue,
        )
    L, eps = cholesky_psd(G)
    dim = positive.size

    def work(a, b):
        return _apply_lower(seed.normals(a, b - a, dim), L)

    inner = np.vstack(_run_chunks(work, n_paths, threads))
    return SamplePaths(_with_zero_column(grid, inner), grid, spec, seed.master_seed, eps)


def sample_brownian(
    grid: TimeGrid,
    n_paths: int,
    seed: SeedSpec = SeedSpec(),
    threads: int = 1,
) -> SamplePaths:
    """Standard Brownian motion from independent increments (no factorization).

    Suitable for long grids where a dense Cholesky factor is impractical.
    """
    n_paths = _check_n_paths(n_paths)
    if not isinstance(grid, TimeGrid):
        grid = TimeGrid(grid)
    positive = grid.times[grid.times > 0.0]
    steps = np.sqrt(np.diff(np.concatenate([[0.0], positive])))

    def work(a, b):
        return np.cumsum(seed.normals(a, b - a, positive.size) * steps, axis=1)

    if positive.size == 0:
        inner = np.zeros((n_paths, 0))
    else:
        inner = np.vstack(_run_chunks(work, n_paths, threads))
    return SamplePaths(_with_zero_column(grid, inner), grid, MinKernel(), seed.master_seed)


def bifbm_decomposition(H: float, K: float) -> tuple[KernelSpec, KernelSpec]:
    """The two summands 2^-K C_K(s^2H, t^2H) and 2^-K Q_2HK(s, t)."""
    w = 2.0**-K
    return Scale(TimeChange(CGamma(K), 2.0 * H), w), Scale(QGamma(2.0 * H * K), w)


def sample_bifbm_sum(
    H: float,
    K: float,
    grid: TimeGrid,
    n_paths: int,
    seed: SeedSpec = SeedSpec(),
    threads: int = 1,
) -> SamplePaths:
    """bifBm as the sum of two independent Gaussian processes.

    Only defined where 0 < K <= 1 and 2HK <= 1.  The summands are drawn from
    substreams 1 and 2 of ``seed.master_seed`` and kept in ``components``.
    """
    if not in_theorem_region(H, K):
        raise ParameterError(f"(H={H}, K={K}) outside 0 < K <= 1, 2HK <= 1")
    first, second = bifbm_decomposition(H, K)
    a = sample_gaussian(first, grid, n_paths, seed.substream(STREAM_FIRST), threads)
    b = sample_gaussian(second, grid, n_paths, seed.substream(STREAM_SECOND), threads)
    return SamplePaths(
        a.values + b.values,
        a.grid,
        Sum(first, second),
        seed.master_seed,
        max(a.jitter, b.jitter),
        (a, b),
    )


def sample_fbm_decomposed(
    H: float,
    grid: TimeGrid,
    n_paths: int,
    seed: SeedSpec = SeedSpec(),
    threads: int = 1,
) -> SamplePaths:
    """fBm with H <= 1/2 as (zeta(t) + beta(t^2H)) / sqrt(2).

    zeta has covariance Q_2H and beta is an independent Brownian motion,
    sampled on the time-changed grid by independent increments.
    """
    H = float(H)
    if not (0.0 < H <= 0.5):
        raise ParameterError(f"decomposed fBm sampler requires 0 < H <= 1/2, got {H}")
    if not isinstance(grid, TimeGrid):
        grid = TimeGrid(grid)
    zeta = sample_gaussian(QGamma(2.0 * H), grid, n_paths, seed.substream(STREAM_FIRST), threads)
    changed = TimeGrid(np.power(grid.times, 2.0 * H))
    beta = sample_brownian(changed, n_paths, seed.substream(STREAM_SECOND), threads)
    values = (zeta.values + beta.values) / math.sqrt(2.0)
    return SamplePaths(values, grid, FBm(H), seed.master_seed, zeta.jitter, (zeta, beta))


def empirical_covariance(paths: SamplePaths | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean-zero covariance estimate and its entrywise standard error.

    ``C[i, j] = mean(x_i x_j)``, ``SE[i, j] = std(x_i x_j, ddof=1) / sqrt(n)``.
    """
    X = paths.values if isinstance(paths, SamplePaths) else np.asarray(paths, dtype=float)
    n, d = X.shape
    if n < 2:
        raise ParameterError("empirical covariance needs at least 2 paths")
    C = np.empty((d, d))
    SE = np.empty((d, d))
    for i in range(d):
        prod = X[:, i, None] * X[:, i:]
        C[i, i:] = prod.mean(axis=0)
        SE[i, i:] = prod.std(axis=0, ddof=1) / math.sqrt(n)
        C[i:, i] = C[i, i:]
        SE[i:, i] = SE[i, i:]
    return C, SE


def direct_bifbm(H: float, K: float, grid: TimeGrid, n_paths: int, seed: SeedSpec = SeedSpec(), threads: int = 1):
    """Shorthand for :func:`sample_gaussian` with the closed-form bifBm kernel."""
    return sample_gaussian(BifBm(H, K), grid, n_paths, seed, threads)
