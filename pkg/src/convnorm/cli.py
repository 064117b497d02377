"""Command-line entry point.

Every subcommand resolves one flat configuration (defaults, then the JSON
file given by ``--config``, then explicit flags), runs, and writes a
self-describing CSV or JSON artifact.  No environment variables are read.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import BOUNDS_COLUMNS, beckner_young_bound, bounds_row
from .diagnostics import center_shift, delta_diameter, near_support, validate_lemma_3_1, validate_lemma_4_1
from .engine import GaussianStart, IndicatorStart, IterationConfig, iterate, multistart
from .errors import (
    ConvNormError,
    CrossCheckError,
    DomainError,
    InfeasibleExponentsError,
    ValidatorFailedError,
)
from .exponents import ExponentTriple, complete_triple, conjugate
from .grid import Gaussian, Tabulated, load_grid_function, sample_kernel, save_grid_function
from .laplace import (
    DEFAULT_L,
    DEFAULT_N,
    TABLE1_COLUMNS,
    TABLE1_P,
    crosscheck_direct_quadrature,
    plot_data,
    reproduce_table1,
    solve_laplace_norm,
    stabilization,
    sweep_minimum,
)
from .oracle import DiscreteOperator, brute_force_search, chirp_decay, spectral_norm_p2
from .output import atomic_write_text, csv_text, json_text

COMMANDS = ("bounds", "solve", "table1", "sweep", "diag", "validate", "oracle", "chirp")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_UNKNOWN_COMMAND = 2
EXIT_USAGE = 3
EXIT_INFEASIBLE = 4
EXIT_DOMAIN = 5
EXIT_IO = 6
EXIT_NUMERICAL = 7
EXIT_VALIDATION = 8

DEFAULT_TOL = 1e-13
DEFAULT_MAX_ITER = 10000

# the chirp needs lambda * L * h <= pi, which the Laplace defaults violate
COMMAND_DEFAULTS = {
    "chirp": {"N": 4096, "L": 4.0, "format": "csv"},
    "table1": {"format": "csv"},
    "sweep": {"format": "csv"},
    "bounds": {"format": "csv"},
}


class UsageError(Exception):
    def __init__(self, message, code=EXIT_USAGE):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    command: str
    N: int = DEFAULT_N
    L: float = DEFAULT_L
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    seed: int = 0
    output: str | None = None
    format: str = "json"
    jobs: int = 1
    double_check: bool = False
    plot_data: str | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}", EXIT_UNKNOWN_COMMAND)
        if int(self.N) != self.N or self.N < 2:
            raise UsageError(f"N must be an integer >= 2, got {self.N!r}")
        self.N = int(self.N)
        if not (self.L > 0 and math.isfinite(self.L)):
            raise UsageError(f"L must be positive, got {self.L!r}")
        if not self.tol > 0:
            raise UsageError(f"tol must be positive, got {self.tol!r}")
        if self.max_iter < 1:
            raise UsageError(f"max_iter must be >= 1, got {self.max_iter!r}")
        if self.format not in ("csv", "json"):
            raise UsageError(f"format must be csv or json, got {self.format!r}")
        if self.jobs < 1:
            raise UsageError(f"jobs must be >= 1, got {self.jobs!r}")

    def iteration(self, initial=None, log_residuals: bool = False) -> IterationConfig:
        return IterationConfig(self.tol, self.max_iter, initial or GaussianStart(),
                               log_residuals=log_residuals)

    def as_dict(self) -> dict:
        return asdict(self)


COMMON_KEYS = ("N", "L", "tol", "max_iter", "seed", "output", "format", "jobs",
               "double_check", "plot_data")


# -- argument parsing -------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--config", help="JSON file with configuration keys; flags override it")
    g.add_argument("--N", type=int, default=None, help=f"grid nodes (default {DEFAULT_N})")
    g.add_argument("--L", type=float, default=None, help=f"half-length of the circle (default {DEFAULT_L:g})")
    g.add_argument("--tol", type=float, default=None, help=f"stopping tolerance (default {DEFAULT_TOL:g})")
    g.add_argument("--max-iter", dest="max_iter", type=int, default=None)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--output", "-o", default=None, help="output file (stdout when omitted)")
    g.add_argument("--format", choices=("csv", "json"), default=None)
    g.add_argument("--jobs", type=int, default=None, help="worker threads for independent jobs")
    g.add_argument("--double-check", dest="double_check", action="store_const", const=True,
                   default=None, help="rerun with 2N and with 2L and report the changes")
    g.add_argument("--plot-data", dest="plot_data", default=None,
                   help="also write plot-ready curves to this CSV file")

    parser = _Parser(prog="convnorm", description="Norms of convolution operators and of the "
                     "Laplace transform between Lebesgue spaces.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    s = sub.add_parser("bounds", parents=[common], help="closed-form bounds for the Laplace norm")
    s.add_argument("--p", type=_float_list, default=None, help="one or more p in [1, 2]")

    s = sub.add_parser("solve", parents=[common], help="iterate to a convolution norm")
    s.add_argument("--p", type=float, default=None)
    s.add_argument("--q", type=float, default=None, help="kernel exponent (default p'/2 for laplace)")
    s.add_argument("--kernel", choices=("laplace", "gaussian", "file"), default=None)
    s.add_argument("--kernel-file", dest="kernel_file", default=None,
                   help="grid function CSV (x,re,im) with its .json sidecar")
    s.add_argument("--gaussian-b", dest="gaussian_b", type=float, default=None,
                   help="kernel exp(-b x^2)")
    s.add_argument("--init", choices=("gaussian", "indicator"), default=None)
    s.add_argument("--save-maximizer", dest="save_maximizer", default=None)
    s.add_argument("--crosscheck", action="store_const", const=True, default=None,
                   help="laplace kernel only: verify by direct quadrature")
    s.add_argument("--multistart", action="store_const", const=True, default=None,
                   help="also run from several fixed starts and compare the limits")
    s.add_argument("--log-residuals", dest="log_residuals", action="store_const", const=True,
                   default=None, help="record the residual after every step")

    s = sub.add_parser("table1", parents=[common], help="Laplace norms at the tabulated p")
    s.add_argument("--p", type=_float_list, default=None)

    s = sub.add_parser("sweep", parents=[common], help="locate the minimum of the Laplace norm")
    s.add_argument("--p-lo", dest="p_lo", type=float, default=None)
    s.add_argument("--p-hi", dest="p_hi", type=float, default=None)
    s.add_argument("--step", type=float, default=None)
    s.add_argument("--refine-tol", dest="refine_tol", type=float, default=None)

    s = sub.add_parser("diag", parents=[common], help="concentration of a stored grid function")
    s.add_argument("--input", default=None, help="grid function CSV with its .json sidecar")
    s.add_argument("--delta", type=float, default=None)
    s.add_argument("--p", type=float, default=None)

    s = sub.add_parser("validate", parents=[common], help="random checks of the scalar inequalities")
    s.add_argument("--samples", type=int, default=None)

    s = sub.add_parser("oracle", parents=[common], help="engine against brute force on Z/m")
    s.add_argument("--m", type=int, default=None)
    s.add_argument("--triple", type=_float_list, default=None, help="p,q or p,q,r")
    s.add_argument("--restarts", type=int, default=None)
    s.add_argument("--kernel", type=str, default=None,
                   help="comma-separated complex entries (default: random from the seed)")

    s = sub.add_parser("chirp", parents=[common], help="norms of chirped Gaussian kernels")
    s.add_argument("--lambdas", type=_float_list, default=None)
    s.add_argument("--triple", type=_float_list, default=None, help="p,q (default 2,1: spectral)")
    s.add_argument("--gaussian-b", dest="gaussian_b", type=float, default=None)
    return parser


OPTION_DEFAULTS = {
    "bounds": {"p": list(TABLE1_P)},
    "solve": {"p": None, "q": None, "kernel": "laplace", "kernel_file": None, "gaussian_b": 1.0,
              "init": "gaussian", "save_maximizer": None, "crosscheck": False,
              "multistart": False, "log_residuals": False},
    "table1": {"p": list(TABLE1_P)},
    "sweep": {"p_lo": 1.02, "p_hi": 1.98, "step": 0.02, "refine_tol": 1e-6},
    "diag": {"input": None, "delta": None, "p": None},
    "validate": {"samples": 10 ** 6},
    "oracle": {"m": 8, "triple": [1.5, 1.5], "restarts": 20, "kernel": None},
    "chirp": {"lambdas": [0.0, 16.0, 32.0, 64.0, 128.0], "triple": [2.0, 1.0], "gaussian_b": 1.0},
}


def resolve_config(argv: list[str]) -> RunConfig:
    if argv and not argv[0].startswith("-") and argv[0] not in COMMANDS:
        raise UsageError(f"unknown command {argv[0]!r}; choose from {', '.join(COMMANDS)}",
                         EXIT_UNKNOWN_COMMAND)
    ns = build_parser().parse_args(argv)
    if ns.command is None:
        raise UsageError(f"a command is required: {', '.join(COMMANDS)}", EXIT_UNKNOWN_COMMAND)
    flags = {k: v for k, v in vars(ns).items() if v is not None and k not in ("command", "config")}

    file_cfg = {}
    if ns.config:
        try:
            file_cfg = json.loads(Path(ns.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise OSError(f"cannot read config {ns.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {ns.config} is not valid JSON: {exc}")
        if not isinstance(file_cfg, dict):
            raise UsageError("config file must hold a JSON object")
        file_cfg.pop("command", None)
        file_cfg = {**file_cfg.pop("options", {}), **file_cfg}

    options = dict(OPTION_DEFAULTS[ns.command])
    common = {"format": "json", **COMMAND_DEFAULTS.get(ns.command, {})}
    for src in (file_cfg, flags):
        for key, value in src.items():
            if key in COMMON_KEYS:
                common[key] = value
            elif key in options:
                options[key] = value
            else:
                raise UsageError(f"unknown configuration key {key!r} for {ns.command}")
    try:
        return RunConfig(command=ns.command, options=options, **common)
    except TypeError as exc:
        raise UsageError(str(exc))


# -- commands -----------------------------------------------------------------------


@dataclass
class Artifact:
    columns: tuple | None
    rows: list | None
    record: dict
    extra_files: dict = field(default_factory=dict)
    """path -> text, written atomically next to the main output."""
    failed: str | None = None
    """Set when the artifact was produced but reports a failure."""


def _triple_from(values) -> ExponentTriple:
    if len(values) == 2:
        return complete_triple(values[0], values[1])
    if len(values) == 3:
        return ExponentTriple(*values)
    raise UsageError(f"a triple needs 2 or 3 numbers, got {values!r}")


def cmd_bounds(cfg: RunConfig) -> Artifact:
    rows = [bounds_row(p).as_dict() for p in cfg.options["p"]]
    for r in rows:
        r.pop("n_numeric")
    return Artifact(BOUNDS_COLUMNS, rows, {"rows": rows})


def _initial(cfg):
    return IndicatorStart() if cfg.options["init"] == "indicator" else GaussianStart()


# fixed starts for --multistart; the first is the default start
MULTISTART = (GaussianStart(1.0), GaussianStart(0.1), GaussianStart(10.0),
              IndicatorStart(-1.0, 1.0), IndicatorStart(0.0, 0.5), GaussianStart(1.0, 2.0))


def _start_label(s) -> str:
    if isinstance(s, GaussianStart):
        return f"gaussian(dispersion={s.dispersion!r}, center={s.center!r})"
    return f"indicator({s.a!r}, {s.b!r})"


def _compare_starts(k, triple, icfg) -> dict:
    reports = multistart(k, triple, MULTISTART, replace(icfg, log_residuals=False))
    values = [r.norm_estimate for r in reports]
    return {"starts": [{"start": _start_label(s), "norm_estimate": r.norm_estimate,
                        "converged": r.converged, "iterations_used": r.iterations_used}
                       for s, r in zip(MULTISTART, reports)],
            "spread": max(values) - min(values)}


def cmd_solve(cfg: RunConfig) -> Artifact:
    o = cfg.options
    if o["p"] is None:
        raise UsageError("solve needs --p")
    icfg = cfg.iteration(_initial(cfg), bool(o["log_residuals"]))
    extra = {}
    if o["kernel"] == "laplace":
        p = o["p"]
        if o["q"] is not None and abs(o["q"] - conjugate(p) / 2) > 1e-12:
            raise UsageError("the laplace kernel fixes q = p'/2")
        run = solve_laplace_norm(p, cfg.N, cfg.L, icfg)
        report = run.report
        extra["bounds"] = run.bounds.as_dict()
        extra["L_used"] = run.L
        extra["truncation_warning"] = run.truncation_warning
        if o["crosscheck"]:
            extra["crosscheck_ratio"] = crosscheck_direct_quadrature(run)
        if cfg.double_check:
            st = stabilization(p, cfg.N, cfg.L, icfg)
            extra["double_check"] = {"double_N": st.double_N, "double_L": st.double_L,
                                     "delta_N": st.delta_N, "delta_L": st.delta_L}
        maximizer = run.maximizer()
        if o["multistart"]:
            extra["multistart"] = _compare_starts(run.kernel, run.triple, icfg)
    else:
        q = o["q"] if o["q"] is not None else conjugate(o["p"]) / 2
        triple = complete_triple(o["p"], q)
        if o["kernel"] == "file":
            if not o["kernel_file"]:
                raise UsageError("--kernel file needs --kernel-file")
            spec = Tabulated(load_grid_function(o["kernel_file"]))
            k = sample_kernel(spec)
        else:
            spec = Gaussian(o["gaussian_b"])
            k = sample_kernel(spec, cfg.N, cfg.L, q=triple.q)
        report = iterate(k, triple, icfg)
        yb = beckner_young_bound(k, triple)
        extra["young_bound"] = yb.young
        extra["beckner_bound"] = yb.beckner
        if cfg.double_check and o["kernel"] == "gaussian":
            n2 = iterate(sample_kernel(spec, 2 * cfg.N, cfg.L), triple, icfg).norm_estimate
            l2 = iterate(sample_kernel(spec, cfg.N, 2 * cfg.L), triple, icfg).norm_estimate
            extra["double_check"] = {"double_N": n2, "double_L": l2,
                                     "delta_N": abs(n2 - report.norm_estimate),
                                     "delta_L": abs(l2 - report.norm_estimate)}
        maximizer = report.final_f
        if o["multistart"]:
            extra["multistart"] = _compare_starts(k, triple, icfg)
    record = {**report.to_dict(), **extra}
    if o["save_maximizer"]:
        save_grid_function(maximizer, o["save_maximizer"])
    rows = [{"iteration": i, "norm": v} for i, v in enumerate(report.history)]
    return Artifact(("iteration", "norm"), rows, record)


def _table_rows(cfg: RunConfig):
    icfg = cfg.iteration()
    rows = [asdict(r) for r in reproduce_table1(cfg.N, cfg.L, icfg, cfg.options["p"], cfg.jobs)]
    columns = TABLE1_COLUMNS
    if cfg.double_check:
        from .laplace import _map
        stabs = _map(lambda p: stabilization(p, cfg.N, cfg.L, icfg), cfg.options["p"], cfg.jobs)
        for r, s in zip(rows, stabs):
            r.update(double_N=s.double_N, double_L=s.double_L, delta_N=s.delta_N, delta_L=s.delta_L)
        columns = columns + ("double_N", "double_L", "delta_N", "delta_L")
    return columns, rows


def cmd_table1(cfg: RunConfig) -> Artifact:
    columns, rows = _table_rows(cfg)
    art = Artifact(columns, rows, {"rows": rows})
    if cfg.plot_data:
        pts = [(r["p"], r["n_numeric"]) for r in rows if r["n_numeric"] is not None]
        art.extra_files[cfg.plot_data] = plot_csv(pts, cfg)
    failed = [r["p"] for r in rows if r["error"]]
    if failed:
        art.failed = f"rows failed at p = {failed}"
    return art


PLOT_COLUMNS = ("p", "n_numeric", "c_rt", "c_f", "c_h", "c_s")


def plot_csv(points, cfg: RunConfig) -> str:
    return csv_text(PLOT_COLUMNS, plot_data(points), {"config": cfg.as_dict()})


def cmd_sweep(cfg: RunConfig) -> Artifact:
    o = cfg.options
    res = sweep_minimum(o["p_lo"], o["p_hi"], o["step"], o["refine_tol"], cfg.N, cfg.L,
                        cfg.iteration(), cfg.jobs)
    summary = {"p_star": res.p_star, "n_star": res.n_star, "unimodal": res.unimodal,
               "evaluations": res.evaluations}
    rows = [{"p": p, "n_numeric": n} for p, n in res.scan]
    art = Artifact(("p", "n_numeric"), rows, {"summary": summary, "scan": rows})
    art.record["_csv_metadata"] = {"summary": summary}
    if cfg.output and cfg.format == "csv":
        art.extra_files[cfg.output + ".summary.json"] = json_text(
            {"config": cfg.as_dict(), **summary})
    if cfg.plot_data:
        art.extra_files[cfg.plot_data] = plot_csv(res.scan, cfg)
    return art


def cmd_diag(cfg: RunConfig) -> Artifact:
    o = cfg.options
    if not o["input"] or o["delta"] is None or o["p"] is None:
        raise UsageError("diag needs --input, --delta and --p")
    f = load_grid_function(o["input"])
    d = delta_diameter(f, o["delta"], o["p"])
    record = {"diameter": d, "uncertainty": 2 * f.step, "N": f.size, "L": f.half_length}
    if d > 0:
        ns = near_support(f, o["delta"], o["p"])
        record["near_support"] = {"a": ns.a, "b": ns.b, "mass": ns.mass}
        record["center_shift"] = center_shift(f, o["delta"], o["p"])
    else:
        record["near_support"] = None
        record["center_shift"] = None
    return Artifact(tuple(k for k in ("diameter", "uncertainty", "center_shift")),
                    [record], record)


def cmd_validate(cfg: RunConfig) -> Artifact:
    n = cfg.options["samples"]
    if n < 1:
        raise UsageError("samples must be >= 1")
    reports = [validate_lemma_3_1(n, cfg.seed, raise_on_violation=False),
               *validate_lemma_4_1(n, cfg.seed, raise_on_violation=False)]
    rows = [r.as_dict() for r in reports]
    art = Artifact(("name", "samples", "violations", "worst_slack", "seed"), rows,
                   {"reports": rows})
    bad = [r.name for r in reports if r.violations]
    if bad:
        art.failed = f"violations in {bad}"
    return art


def _parse_kernel(text: str) -> np.ndarray:
    try:
        return np.array([complex(t.strip().replace(" ", "")) for t in text.split(",")])
    except ValueError:
        raise UsageError(f"cannot parse kernel entries {text!r}")


def cmd_oracle(cfg: RunConfig) -> Artifact:
    o = cfg.options
    triple = _triple_from(o["triple"])
    if o["kernel"]:
        vec = _parse_kernel(o["kernel"])
    else:
        rng = np.random.default_rng([cfg.seed, o["m"]])
        vec = rng.standard_normal(o["m"]) + 1j * rng.standard_normal(o["m"])
    op = DiscreteOperator(vec, triple)
    res = brute_force_search(op, o["restarts"], cfg.seed, cfg.jobs, cfg=cfg.iteration())
    record = {"m": op.m, "triple": list(triple.as_tuple()),
              "kernel": [[float(z.real), float(z.imag)] for z in op.kernel],
              "brute_force": res.value, "engine": res.engine_value,
              "agree": abs(res.value - res.engine_value) <= 1e-6}
    if triple.p == 2 and triple.r == 2:
        record["spectral"] = spectral_norm_p2(op)
        record["agree"] = record["agree"] and abs(record["spectral"] - res.value) <= 1e-10
    cols = ("m", "brute_force", "engine", "spectral", "agree")
    art = Artifact(cols, [record], record)
    if not record["agree"]:
        art.failed = "engine and brute force disagree"
    return art


def cmd_chirp(cfg: RunConfig) -> Artifact:
    o = cfg.options
    triple = _triple_from(o["triple"])
    res = chirp_decay(Gaussian(o["gaussian_b"]), o["lambdas"], cfg.N, cfg.L, triple,
                      cfg.iteration())
    rows = [{"lambda": l, "norm": n, "slope_fit": res.slope} for l, n in res.points]
    record = {"points": rows, "slope_fit": res.slope, "max_ripple": res.max_ripple,
              "ripple_ok": res.ripple_ok}
    return Artifact(("lambda", "norm", "slope_fit"), rows, record)


HANDLERS = {"bounds": cmd_bounds, "solve": cmd_solve, "table1": cmd_table1, "sweep": cmd_sweep,
            "diag": cmd_diag, "validate": cmd_validate, "oracle": cmd_oracle, "chirp": cmd_chirp}


def render(art: Artifact, cfg: RunConfig) -> str:
    if cfg.format == "csv":
        meta = {"command": cfg.command, "config": cfg.as_dict(),
                **art.record.get("_csv_metadata", {})}
        return csv_text(art.columns, art.rows, meta)
    record = {k: v for k, v in art.record.items() if not k.startswith("_")}
    return json_text({"command": cfg.command, "config": cfg.as_dict(), **record})


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute one resolved configuration; returns the exit status."""
    art = HANDLERS[cfg.command](cfg)
    text = render(art, cfg)
    if cfg.output:
        atomic_write_text(cfg.output, text)
    else:
        (stdout or sys.stdout).write(text)
    for path, body in art.extra_files.items():
        atomic_write_text(path, body)
    if art.failed:
        raise _Reported(art.failed)
    return EXIT_OK


class _Reported(Exception):
    """The artifact was written but records a failed check."""


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, UsageError):
        return exc.code
    if isinstance(exc, InfeasibleExponentsError):
        return EXIT_INFEASIBLE
    if isinstance(exc, (ValidatorFailedError, CrossCheckError, _Reported)):
        return EXIT_VALIDATION
    if isinstance(exc, DomainError):
        return EXIT_DOMAIN
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, ConvNormError):
        return EXIT_NUMERICAL
    if isinstance(exc, ValueError):
        return EXIT_DOMAIN
    return EXIT_INTERNAL


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = resolve_config(argv)
        return run(cfg)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except Exception as exc:
        code = _exit_code(exc)
        record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        for attr in ("counterexample", "diagnostics"):
            if getattr(exc, attr, None):
                record[attr] = getattr(exc, attr)
        sys.stderr.write(json.dumps(record, sort_keys=True, default=str) + "\n")
        return code


if __name__ == "__main__":
    sys.exit(main())
