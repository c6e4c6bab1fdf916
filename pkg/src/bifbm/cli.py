"""
Command-line front end.

Usage:
    bifbm eval --kernel bifbm --H 2 --K 0.25 --s 1 --t 2
    bifbm psd-check --kernel bifbm --H 2 --K 0.25 --grid geom:0.015625:64:24
    bifbm sample --kernel bifbm --H 2 --K 0.25 --method decomp --n-paths 1000 -o paths.csv --format csv
    bifbm analyze counterexample --gamma 1.5
    bifbm region --H-range 0.25:4 --K-range 0.05:1 --steps 20:20 --format csv

Exit codes: 0 success, 1 a requested check failed, 2 usage or parameter error.
Grids: ``uniform:a:b:n``, ``geom:a:b:n`` or ``list:t1,t2,...``.
Without ``--seed`` the fixed seed ``bifbm.rng.DEFAULT_SEED`` is used.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field

import numpy as np

from . import analysis, kernels, oracles, region, sampler
from .emit import emit, to_json, write_text
from .errors import BifbmError, NotPSDError, ParameterError
from .gram import DEFAULT_REL_TOL, TimeGrid, build_gram, cholesky_psd, psd_check
from .rng import DEFAULT_SEED, SeedSpec

__all__ = ["RunConfig", "build_parser", "parse_config", "dispatch", "main"]

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2

KERNELS = ("bifbm", "fbm", "cgamma", "qgamma", "lei-nualart", "min")
DEFAULT_GRID = "geom:0.015625:64:24"
IDENTITY_TOL = 1e-12


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so dispatch() controls the exit code."""

    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}", self.format_usage())


class _UsageError(Exception):
    def __init__(self, message, usage):
        super().__init__(message)
        self.usage = usage


def _pair(text: str) -> tuple[float, float]:
    a, b = text.split(":")
    return float(a), float(b)


def _int_pair(text: str) -> tuple[int, int]:
    a, b = text.split(":")
    return int(a), int(b)


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _common(p: argparse.ArgumentParser, grid: bool = True, kernel: bool = False):
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("-o", "--output", default=None, help="output path (default stdout)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--rel-tol", type=float, default=DEFAULT_REL_TOL)
    if grid:
        p.add_argument("--grid", default=DEFAULT_GRID)
    if kernel:
        p.add_argument("--kernel", choices=KERNELS, default="bifbm")
        p.add_argument("--H", type=float)
        p.add_argument("--K", type=float)
        p.add_argument("--gamma", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bifbm", description="bifractional Brownian motion covariance toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="evaluate a kernel at (s, t)")
    _common(p, grid=False, kernel=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--t", type=float, required=True)

    p = sub.add_parser("gram", help="Gram matrix on a grid")
    _common(p, kernel=True)

    p = sub.add_parser("psd-check", help="minimum-eigenvalue PSD verdict")
    _common(p, kernel=True)
    p.add_argument("--expect", choices=("psd", "notpsd", "any"), default="psd")

    p = sub.add_parser("chol", help="jittered Cholesky factor")
    _common(p, kernel=True)

    p = sub.add_parser("sample", help="simulate Gaussian paths")
    _common(p, kernel=True)
    p.add_argument("--method", choices=("direct", "decomp", "increments"), default="direct")
    p.add_argument("--n-paths", type=int, default=1000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)

    p = sub.add_parser("verify-decomp", help="check the covariance identities on a grid")
    _common(p)
    p.add_argument("--H", type=float, required=True)
    p.add_argument("--K", type=float, required=True)
    p.add_argument("--tol", type=float, default=IDENTITY_TOL)

    p = sub.add_parser("oracle-compare", help="closed forms vs quadrature")
    _common(p)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(grid="geom:0.25:4:8")

    p = sub.add_parser("analyze", help="structural property checks")
    asub = p.add_subparsers(dest="analysis", required=True, parser_class=_Parser)
    a = asub.add_parser("self-sim")
    _common(a)
    a.add_argument("--H", type=float, required=True)
    a.add_argument("--K", type=float, required=True)
    a.add_argument("--a", type=float, default=2.0)
    a = asub.add_parser("lamperti")
    _common(a, grid=False)
    a.add_argument("--H", type=float, required=True)
    a.add_argument("--K", type=float, required=True)
    a.add_argument("--lags", type=_floats, default="0.5,1,2")
    a.add_argument("--bases", type=_floats, default="-2,-1,0,1,2")
    a = asub.add_parser("quasihelix")
    _common(a)
    a.add_argument("--H", type=float, required=True)
    a.add_argument("--K", type=float, required=True)
    a = asub.add_parser("increment-limit")
    _common(a)
    a.add_argument("--H", type=float, required=True)
    a.add_argument("--K", type=float, required=True)
    a.add_argument("--T", type=_floats, default="10,100,1000,10000")
    a.set_defaults(grid="uniform:0:1:9")
    a = asub.add_parser("p-variation")
    _common(a, grid=False)
    a.add_argument("--source", choices=("brownian", "bifbm"), default="brownian")
    a.add_argument("--H", type=float)
    a.add_argument("--K", type=float)
    a.add_argument("--p", type=float, default=2.0)
    a.add_argument("--levels", type=int, default=10)
    a.add_argument("--horizon", type=float, default=1.0)
    a.add_argument("--seed", type=int, default=DEFAULT_SEED)
    a = asub.add_parser("counterexample")
    _common(a, grid=False)
    a.add_argument("--gamma", type=float, required=True)

    p = sub.add_parser("region", help="PSD map over an (H, K) lattice")
    _common(p, grid=False)
    p.add_argument("--grid", default=None, help="default: geom 2^-6..2^6 (24 pts) plus t=1000")
    p.add_argument("--H-range", type=_pair, default="0.25:4")
    p.add_argument("--K-range", type=_pair, default="0.05:1")
    p.add_argument("--steps", type=_int_pair, default="20:20")

    p = sub.add_parser("critical-k", help="bracket the PSD boundary in K for fixed H")
    _common(p, grid=False)
    p.add_argument("--grid", default=None)
    p.add_argument("--H", type=float, required=True)
    p.add_argument("--resolution", type=float, default=1e-3)

    p = sub.add_parser("hk-trend", help="2H*K at the numerical boundary for increasing H")
    _common(p, grid=False)
    p.add_argument("--grid", default=None)
    p.add_argument("--H-list", type=_floats, default="1.5,2,4,8")
    p.add_argument("--resolution", type=float, default=1e-3)
    return parser


@dataclass(frozen=True)
class RunConfig:
    """Parsed invocation: command path plus every option with its value."""

    command: tuple[str, ...]
    options: dict = field(default_factory=dict)

    def to_argv(self) -> list[str]:
        """Canonical flag list: command words, then options sorted by name."""
        argv = list(self.command)
        for name in sorted(self.options):
            value = self.options[name]
            if value is None:
                continue
            flag = "--" + name.replace("_", "-")
            if isinstance(value, (list, tuple)):
                sep = ":" if name in ("H_range", "K_range", "steps") else ","
                value = sep.join(repr(v) for v in value)
            elif isinstance(value, float):
                value = repr(value)
            # --flag=value keeps negative lists like -2,-1 from reading as options
            argv.append(f"{flag}={value}")
        return argv


def parse_config(argv) -> RunConfig:
    ns = build_parser().parse_args(list(argv))
    opts = vars(ns).copy()
    command = [opts.pop("command")]
    if "analysis" in opts:
        command.append(opts.pop("analysis"))
    return RunConfig(tuple(command), opts)


def _grid(cfg: dict) -> TimeGrid | None:
    text = cfg.get("grid")
    return None if text is None else TimeGrid.parse(text)


def _need(cfg: dict, *names):
    missing = [n for n in names if cfg.get(n) is None]
    if missing:
        raise ParameterError("missing required option(s): " + ", ".join("--" + n for n in missing))
    return [cfg[n] for n in names]


def kernel_from_options(cfg: dict) -> kernels.KernelSpec:
    name = cfg["kernel"]
    if name == "bifbm":
        return kernels.BifBm(*_need(cfg, "H", "K"))
    if name == "fbm":
        return kernels.FBm(*_need(cfg, "H"))
    if name == "cgamma":
        return kernels.CGamma(*_need(cfg, "gamma"))
    if name == "qgamma":
        return kernels.QGamma(*_need(cfg, "gamma"))
    if name == "lei-nualart":
        return kernels.LeiNualartRemainder(*_need(cfg, "H", "K"))
    return kernels.MinKernel()


def _out(report, cfg, fmt=None) -> int:
    emit(report, fmt or cfg["format"], cfg["output"])
    return EXIT_OK


def _json_out(report, cfg) -> int:
    return _out(report, cfg, "json")


def _cmd_eval(cfg):
    spec = kernel_from_options(cfg)
    value = kernels.eval_kernel(spec, cfg["s"], cfg["t"])
    return _json_out({"kernel": spec, "s": cfg["s"], "t": cfg["t"], "value": value}, cfg)


def _cmd_gram(cfg):
    return _out(build_gram(kernel_from_options(cfg), _grid(cfg)), cfg)


def _cmd_psd(cfg):
    G = build_gram(kernel_from_options(cfg), _grid(cfg))
    report = psd_check(G, cfg["rel_tol"])
    _json_out(report, cfg)
    expect = cfg["expect"]
    if expect == "any" or (expect == "psd") == report.is_psd:
        return EXIT_OK
    return EXIT_CHECK_FAILED


def _cmd_chol(cfg):
    G = build_gram(kernel_from_options(cfg), _grid(cfg))
    try:
        L, eps = cholesky_psd(G)
    except NotPSDError as exc:
        _json_out({"error": "NotPSD", "min_eigenvalue": exc.min_eigenvalue}, cfg)
        return EXIT_CHECK_FAILED
    if cfg["format"] == "csv":
        return _out(L, cfg)
    return _json_out({"jitter": eps, "L": L}, cfg)


def _cmd_sample(cfg):
    grid = _grid(cfg)
    seed = SeedSpec(cfg["seed"])
    n, threads = cfg["n_paths"], cfg["threads"]
    method, name = cfg["method"], cfg["kernel"]
    try:
        if method == "decomp" and name == "bifbm":
            H, K = _need(cfg, "H", "K")
            paths = sampler.sample_bifbm_sum(H, K, grid, n, seed, threads)
        elif method == "decomp" and name == "fbm":
            (H,) = _need(cfg, "H")
            paths = sampler.sample_fbm_decomposed(H, grid, n, seed, threads)
        elif method == "decomp":
            raise ParameterError("--method decomp supports --kernel bifbm or fbm")
        elif method == "increments":
            if name != "min":
                raise ParameterError("--method increments supports --kernel min only")
            paths = sampler.sample_brownian(grid, n, seed, threads)
        else:
            paths = sampler.sample_gaussian(kernel_from_options(cfg), grid, n, seed, threads, cfg["rel_tol"])
    except NotPSDError as exc:
        print(f"bifbm: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    _out(paths, cfg)
    if cfg["output"] not in (None, "-"):
        meta = paths.metadata() | {"method": method}
        write_text(to_json(meta), str(cfg["output"]) + ".meta.json")
    return EXIT_OK


def identity_report(H: float, K: float, grid: TimeGrid) -> dict:
    """Worst residuals of the bifBm decomposition and remainder identities on ``grid``.

    ``fbm_corollary`` checks the Q/min split of fBm at Hurst index HK.
    """
    t = grid.times
    s, u = np.meshgrid(t, t, indexing="ij")
    R = kernels.BifBm(H, K)(s, u)
    out = {"H": H, "K": K}
    if kernels.in_theorem_region(H, K):
        first, second = sampler.bifbm_decomposition(H, K)
        out["decomposition"] = float(np.max(np.abs(R - first(s, u) - second(s, u)) / (1 + np.abs(R))))
    if K <= 1 and H * K <= 1:
        S = kernels.FBm(H * K)(s, u)
        rem = kernels.LeiNualartRemainder(H, K)(s, u)
        out["lei_nualart"] = float(np.max(np.abs(S - 2.0 ** (K - 1) * R - rem) / (1 + np.abs(S))))
    if H * K <= 0.5:
        h = H * K
        S = kernels.FBm(h)(s, u)
        half = 0.5 * (kernels.QGamma(2 * h)(s, u) + np.power(np.minimum(s, u), 2 * h))
        out["fbm_corollary"] = float(np.max(np.abs(S - half)))
    return out


def _cmd_verify(cfg):
    report = identity_report(cfg["H"], cfg["K"], _grid(cfg))
    checks = [v for k, v in report.items() if k not in ("H", "K")]
    report["tolerance"] = cfg["tol"]
    report["pass"] = all(v <= cfg["tol"] for v in checks)
    _json_out(report, cfg)
    return EXIT_OK if report["pass"] else EXIT_CHECK_FAILED


def _cmd_oracle(cfg):
    rep = oracles.oracle_report(cfg["gamma"], _grid(cfg))
    ok = rep.passed(cfg["tol"])
    _json_out(rep.to_dict() | {"tolerance": cfg["tol"], "pass": ok}, cfg)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _cmd_analyze(cfg, which):
    if which == "self-sim":
        rep = analysis.self_similarity_deviation(cfg["H"], cfg["K"], cfg["a"], _grid(cfg))
        _json_out(rep, cfg)
        return EXIT_OK if rep.passed else EXIT_CHECK_FAILED
    if which == "lamperti":
        rep = analysis.lamperti_stationarity(cfg["H"], cfg["K"], cfg["lags"], cfg["bases"])
        _json_out(rep, cfg)
        return EXIT_OK if rep.passed else EXIT_CHECK_FAILED
    if which == "quasihelix":
        rep = analysis.quasihelix_report(cfg["H"], cfg["K"], _grid(cfg))
        _json_out(rep, cfg)
        return EXIT_OK if rep.passed else EXIT_CHECK_FAILED
    if which == "increment-limit":
        grid = _grid(cfg)
        errs = [analysis.increment_limit_error(cfg["H"], cfg["K"], T, grid) for T in cfg["T"]]
        # exact cases (K = 1) sit at rounding level
        ok = all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))
        _json_out({"T": cfg["T"], "error": errs, "nonincreasing": ok}, cfg)
        return EXIT_OK if ok else EXIT_CHECK_FAILED
    if which == "p-variation":
        levels = cfg["levels"]
        grid = TimeGrid.uniform(0.0, cfg["horizon"], 2**levels + 1)
        seed = SeedSpec(cfg["seed"])
        if cfg["source"] == "brownian":
            paths = sampler.sample_brownian(grid, 1, seed)
        else:
            H, K = _need(cfg, "H", "K")
            paths = sampler.sample_gaussian(kernels.BifBm(H, K), grid, 1, seed)
        sums = analysis.p_variation(paths.values[0], grid, cfg["p"], levels)
        if cfg["format"] == "csv":
            return _out(sums, cfg)
        return _json_out({"p": cfg["p"], "levels": list(range(levels + 1)), "sums": sums}, cfg)
    # counterexample
    gamma = cfg["gamma"]
    a = analysis.find_negative_a(gamma)
    return _json_out({"gamma": gamma, "a": a, "f": analysis.f_counterexample(gamma, a)}, cfg)


def _cmd_region(cfg):
    scan = region.scan_region(
        cfg["H_range"], cfg["K_range"], cfg["steps"], _grid(cfg), cfg["rel_tol"], cfg["threads"]
    )
    return _out(scan, cfg)


def _cmd_critical(cfg):
    est = region.critical_k(cfg["H"], _grid(cfg), cfg["resolution"], cfg["rel_tol"], threads=cfg["threads"])
    return _json_out(est, cfg)


def _cmd_trend(cfg):
    rows = region.hk_trend(cfg["H_list"], _grid(cfg), cfg["resolution"], cfg["rel_tol"], cfg["threads"])
    return _json_out([{"H": h, "two_H_K_mid": v, "estimate": e} for h, v, e in rows], cfg)


_COMMANDS = {
    "eval": _cmd_eval,
    "gram": _cmd_gram,
    "psd-check": _cmd_psd,
    "chol": _cmd_chol,
    "sample": _cmd_sample,
    "verify-decomp": _cmd_verify,
    "oracle-compare": _cmd_oracle,
    "region": _cmd_region,
    "critical-k": _cmd_critical,
    "hk-trend": _cmd_trend,
}


def dispatch(argv) -> int:
    """Run one CLI invocation and return its exit code."""
    try:
        config = parse_config(argv)
    except _UsageError as exc:
        print(exc.usage + str(exc), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except ValueError as exc:
        print(f"bifbm: {exc}", file=sys.stderr)
        return EXIT_USAGE
    cfg = dict(config.options)
    if cfg.get("threads", 1) < 1:
        print("bifbm: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        if config.command[0] == "analyze":
            return _cmd_analyze(cfg, config.command[1])
        return _COMMANDS[config.command[0]](cfg)
    except NotPSDError as exc:
        print(f"bifbm: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except BifbmError as exc:
        print(f"bifbm: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
