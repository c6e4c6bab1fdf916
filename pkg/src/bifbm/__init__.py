"""Bifractional Brownian motion: covariance kernels, PSD checks, samplers and oracles."""

from .errors import BifbmError, ConvergenceError, GridError, NotPSDError, NumericError, ParameterError
from .gram import GramMatrix, PSDReport, TimeGrid, Verdict, build_gram, cholesky_psd, min_eigenvalue, psd_check
from .kernels import (
    BifBm,
    CGamma,
    FBm,
    KernelSpec,
    LeiNualartRemainder,
    MinKernel,
    ParamVerdict,
    QGamma,
    Region,
    Scale,
    Sum,
    TimeChange,
    c_gamma_const,
    classify_params,
    eval_kernel,
    increment_variance,
)
from .rng import DEFAULT_SEED, SeedSpec

__version__ = "0.1.0"
