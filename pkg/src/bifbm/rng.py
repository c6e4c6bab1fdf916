"""
Counter-based normal variates for reproducible path simulation.

Scheme (fixed; changing it changes every sampled path):

* bit generator: Philox-4x64 with key ``master_seed + 2**64 * stream``;
* path ``p`` of dimension ``d`` owns counter blocks
  ``[p * B, (p + 1) * B)`` with ``B = ceil(d / 4)`` (four 64-bit words per
  block), of which the first ``d`` words are used;
* each word ``w`` becomes ``u = ((w >> 11) + 0.5) / 2**53`` in (0, 1), and
  ``z = Phi^{-1}(u)`` by inversion.

Any subset of paths can therefore be generated independently, in any order
and on any thread, with identical results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

from .errors import ParameterError

__all__ = ["DEFAULT_SEED", "SeedSpec", "uniforms", "standard_normals"]

DEFAULT_SEED = 20190501
_U64 = 1 << 64


@dataclass(frozen=True)
class SeedSpec:
    master_seed: int = DEFAULT_SEED
    stream: int = 0

    def __post_init__(self):
        if not (0 <= int(self.master_seed) < _U64):
            raise ParameterError("master_seed must be a 64-bit unsigned integer")
        if not (0 <= int(self.stream) < _U64):
            raise ParameterError("stream must be a 64-bit unsigned integer")

    def substream(self, stream: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, stream)

    def normals(self, start: int, n_paths: int, dim: int) -> np.ndarray:
        return standard_normals(self, start, n_paths, dim)


def _raw_words(seed: SeedSpec, start: int, n_paths: int, dim: int) -> np.ndarray:
    blocks = -(-dim // 4)
    bitgen = Philox(key=int(seed.master_seed) + _U64 * int(seed.stream), counter=start * blocks)
    raw = bitgen.random_raw(n_paths * blocks * 4)
    return raw.reshape(n_paths, blocks * 4)[:, :dim]


def uniforms(seed: SeedSpec, start: int, n_paths: int, dim: int) -> np.ndarray:
    """(n_paths, dim) array of open-interval uniforms for paths start, start+1, ..."""
    if start < 0 or n_paths < 0 or dim < 0:
        raise ParameterError("start, n_paths and dim must be nonnegative")
    if n_paths == 0 or dim == 0:
        return np.zeros((n_paths, dim))
    words = _raw_words(seed, start, n_paths, dim)
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def standard_normals(seed: SeedSpec, start: int, n_paths: int, dim: int) -> np.ndarray:
    """Standard normals by inversion of :func:`uniforms`."""
    return ndtri(uniforms(seed, start, n_paths, dim))
