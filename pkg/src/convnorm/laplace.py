"""Norms of the Laplace transform L_p(R+) -> L_p'(R+), 1 < p < 2.

The substitutions x = e^y, t = e^s, F(y) = f(e^y) e^(y/p) turn the Laplace
transform into F -> h_p * reflect(F) with h_p(y) = exp(y/p' - e^y), an
isometric change of variables on both sides.  Its norm is therefore the
(p, p)-norm of convolution with h_p, for the triple (p, p'/2, p).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .bounds import BoundsRow, bounds_row
from .engine import IterationConfig, IterationReport, iterate
from .errors import CrossCheckError, DomainError, PreconditionError
from .exponents import ExponentTriple, conjugate, laplace_triple
from .grid import GridFunction, LaplaceHp, reflect, sample_kernel, tail_mass

TABLE1_P = (1.05, 1.1, 1.2, 1.3, 1.4, 1.5, 1.6, 1.7, 1.8, 1.9)

DEFAULT_N = 512
DEFAULT_L = 16.0
TAIL_REL_TOL = 1e-4
MAX_L = 4096.0
WARN_TRUNCATION = 0.01


def choose_half_length(p: float, L: float = DEFAULT_L, rel_tol: float = TAIL_REL_TOL,
                       max_L: float = MAX_L) -> float:
    """Double L until the L_q mass of h_p outside [-L, L) is at most
    ``rel_tol`` times ||h_p||_q^q (q = p'/2).

    The q-mass of the left tail behaves like 2 exp(-L/2) for every p, so the
    resulting L does not depend on p in practice.
    """
    kernel = LaplaceHp(p)
    q = conjugate(p) / 2.0
    total = kernel.lq_power(q)
    while tail_mass(kernel, q, L) > rel_tol * total:
        if 2 * L > max_L:
            raise DomainError(f"no half-length up to {max_L} meets the tail tolerance at p={p}")
        L *= 2.0
    return L


@dataclass(frozen=True, eq=False)
class LaplaceRun:
    p: float
    N: int
    L: float
    report: IterationReport
    bounds: BoundsRow
    truncation_warning: bool
    kernel: GridFunction

    @property
    def triple(self) -> ExponentTriple:
        return self.report.triple

    @property
    def norm(self) -> float:
        return self.report.norm_estimate

    def maximizer(self) -> GridFunction:
        """The unit-norm F with ||h_p * reflect(F)|| maximal (reflection of
        the engine iterate, which maximizes ||h_p * f||)."""
        return reflect(self.report.final_f)


def solve_laplace_norm(p: float, N: int = DEFAULT_N, L: float = DEFAULT_L,
                       cfg: IterationConfig | None = None,
                       auto_enlarge: bool = True) -> LaplaceRun:
    """Approximate N(p) = ||Laplace||_{p -> p'} on an N-node grid."""
    if not (1 < p < 2):
        raise DomainError(f"p must lie in (1, 2), got {p!r}")
    if auto_enlarge:
        L = choose_half_length(p, L)
    triple = laplace_triple(p)
    k = sample_kernel(LaplaceHp(p), N, L, q=triple.q)
    report = iterate(k, triple, cfg)
    warn = (report.truncation_bound or 0.0) > WARN_TRUNCATION * report.norm_estimate
    return LaplaceRun(p, N, L, report, bounds_row(p, report.norm_estimate), warn, k.grid)


# -- minimum of N(p) -----------------------------------------------------------


def golden_section_minimize(func: Callable[[float], float], a: float, b: float,
                            tol: float = 1e-6, max_iter: int = 200):
    """Golden-section search on [a, b]; returns (x_min, f_min, evaluations)."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = func(c), func(d)
    evals = 2
    while abs(b - a) > tol and evals < max_iter:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = func(d)
        evals += 1
    if fc < fd:
        return c, fc, evals
    return d, fd, evals


def is_unimodal(values: Sequence[float]) -> bool:
    """True when the values decrease then increase (at most one sign change
    of the successive differences, from negative to positive)."""
    d = np.sign(np.diff(np.asarray(values, dtype=float)))
    d = d[d != 0]
    if d.size == 0:
        return True
    changes = np.count_nonzero(np.diff(d))
    return changes == 0 or (changes == 1 and d[0] < 0)


@dataclass(frozen=True)
class SweepResult:
    p_star: float
    n_star: float
    scan: tuple
    unimodal: bool
    evaluations: int


def _map(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def sweep_minimum(p_lo: float = 1.02, p_hi: float = 1.98, coarse_step: float = 0.02,
                  refine_tol: float = 1e-6, N: int = DEFAULT_N, L: float = DEFAULT_L,
                  cfg: IterationConfig | None = None, jobs: int = 1) -> SweepResult:
    """Coarse scan of N(p) followed by golden-section refinement around the
    smallest scan value."""
    if not (1 < p_lo < p_hi < 2):
        raise DomainError(f"need 1 < p_lo < p_hi < 2, got [{p_lo}, {p_hi}]")
    count = int(round((p_hi - p_lo) / coarse_step))
    ps = [round(p_lo + i * coarse_step, 12) for i in range(count + 1)]
    if ps[-1] < p_hi - 1e-12:
        ps.append(p_hi)

    def value(p):
        return solve_laplace_norm(p, N, L, cfg).norm

    ns = _map(value, ps, jobs)
    scan = tuple(zip(ps, ns))
    i = int(np.argmin(ns))
    if not is_unimodal(ns):
        return SweepResult(ps[i], ns[i], scan, False, len(ps))
    lo = ps[max(i - 1, 0)]
    hi = ps[min(i + 1, len(ps) - 1)]
    p_star, n_star, evals = golden_section_minimize(value, lo, hi, refine_tol)
    if ns[i] < n_star:
        p_star, n_star = ps[i], ns[i]
    return SweepResult(p_star, n_star, scan, True, len(ps) + evals)


# -- independent check by direct quadrature ------------------------------------


@dataclass(frozen=True)
class QuadratureRatio:
    ratio: float
    lf_norm: float
    f_norm: float
    tail_fraction: float


def direct_laplace_ratio(F: Callable[[np.ndarray], np.ndarray], p: float, span: float,
                         quad_points: int = 2048, tail_tol: float = 1e-6,
                         chunk: int = 512) -> QuadratureRatio:
    """||Lf||_p' / ||f||_p for f(t) = F(log t) t^(-1/p), by direct summation
    of the Laplace integral.

    Both t and x run over log-spaced grids on [e^-span, e^span]; integrals
    use the trapezoid rule in the logarithmic variable.
    """
    if quad_points < 16:
        raise DomainError("quad_points must be at least 16")
    pc = conjugate(p)
    y = np.linspace(-span, span, quad_points)
    dy = y[1] - y[0]
    w = np.full(quad_points, dy)
    w[0] = w[-1] = dy / 2
    t = np.exp(y)
    f = np.asarray(F(y), dtype=np.complex128) * t ** (-1.0 / p)
    f_mass = np.abs(f) ** p * t * w
    f_norm = float(np.sum(f_mass)) ** (1.0 / p)
    if f_norm == 0:
        raise PreconditionError("test function vanishes")

    ft = f * t * w
    lf = np.empty(quad_points, dtype=np.complex128)
    for start in range(0, quad_points, chunk):
        xs = t[start:start + chunk]
        lf[start:start + chunk] = np.exp(-np.outer(xs, t)) @ ft
    lf_mass = np.abs(lf) ** pc * t * w
    lf_norm = float(np.sum(lf_mass)) ** (1.0 / pc)

    edge = max(1, quad_points // 50)
    tails = [
        (f_mass[:edge].sum() + f_mass[-edge:].sum()) / f_mass.sum(),
        (lf_mass[:edge].sum() + lf_mass[-edge:].sum()) / max(lf_mass.sum(), 1e-300),
    ]
    tail = float(max(tails))
    if tail > tail_tol:
        raise CrossCheckError(
            f"quadrature tails carry a fraction {tail:.2e} of the mass (limit {tail_tol:.0e})",
            {"f_tail": float(tails[0]), "lf_tail": float(tails[1]), "span": span},
        )
    return QuadratureRatio(lf_norm / f_norm, lf_norm, f_norm, tail)


def periodic_interpolant(g: GridFunction) -> Callable[[np.ndarray], np.ndarray]:
    """Periodic cubic spline through the samples of g (real and imaginary
    parts separately)."""
    x = np.append(g.x, g.half_length)
    v = np.append(g.values, g.values[0])
    re = CubicSpline(x, v.real, bc_type="periodic")
    im = CubicSpline(x, v.imag, bc_type="periodic")
    L = g.half_length

    def F(y):
        y = np.asarray(y, dtype=float)
        out = re(y) + 1j * im(y)
        return np.where(np.abs(y) <= L, out, 0.0)

    return F


def crosscheck_direct_quadrature(run: LaplaceRun, quad_points: int = 2048) -> float:
    """Map the computed maximizer back to R+ and evaluate ||Lf||/||f|| by
    direct quadrature; returns the ratio."""
    if not run.report.converged:
        raise PreconditionError("cross-check needs a converged run")
    F = periodic_interpolant(run.maximizer())
    return direct_laplace_ratio(F, run.p, run.L, quad_points).ratio


# -- tabulated norms -----------------------------------------------------------


@dataclass
class Table1Row:
    p: float
    n_numeric: float | None = None
    c_s: float | None = None
    c_rt: float | None = None
    c_f: float | None = None
    c_h: float | None = None
    empirical_gap: float | None = None
    iterations: int | None = None
    residual: float | None = None
    truncation_bound: float | None = None
    L: float | None = None
    converged: bool | None = None
    error: str | None = None

    @property
    def bounds(self) -> BoundsRow:
        return BoundsRow(self.p, self.c_rt, self.c_f, self.c_h, self.c_s,
                         self.empirical_gap, self.n_numeric)


TABLE1_COLUMNS = ("p", "n_numeric", "c_s", "c_rt", "c_f", "c_h", "empirical_gap",
                  "iterations", "residual", "truncation_bound", "L", "converged", "error")


def table1_row(p: float, N: int = DEFAULT_N, L: float = DEFAULT_L,
               cfg: IterationConfig | None = None) -> Table1Row:
    row = Table1Row(p)
    try:  # failures are recorded in-row; the table continues
        b = bounds_row(p)
        row.c_s, row.c_rt, row.c_f, row.c_h = b.c_s, b.c_rt, b.c_f, b.c_h
        row.empirical_gap = b.empirical_gap
        run = solve_laplace_norm(p, N, L, cfg)
    except Exception as exc:
        row.error = f"{type(exc).__name__}: {exc}"
        return row
    rep = run.report
    row.n_numeric = rep.norm_estimate
    row.iterations = rep.iterations_used
    row.residual = rep.residual
    row.truncation_bound = rep.truncation_bound
    row.L = run.L
    row.converged = rep.converged
    return row


def reproduce_table1(N: int = DEFAULT_N, L: float = DEFAULT_L,
                     cfg: IterationConfig | None = None,
                     ps: Sequence[float] = TABLE1_P, jobs: int = 1) -> list[Table1Row]:
    return _map(lambda p: table1_row(p, N, L, cfg), list(ps), jobs)


@dataclass(frozen=True)
class Stabilization:
    p: float
    base: float
    double_N: float
    double_L: float

    @property
    def delta_N(self) -> float:
        return abs(self.double_N - self.base)

    @property
    def delta_L(self) -> float:
        return abs(self.double_L - self.base)


def stabilization(p: float, N: int = DEFAULT_N, L: float = DEFAULT_L,
                  cfg: IterationConfig | None = None) -> Stabilization:
    """Recompute with 2N nodes and with a doubled half-length."""
    base = solve_laplace_norm(p, N, L, cfg)
    dn = solve_laplace_norm(p, 2 * N, base.L, cfg, auto_enlarge=False)
    dl = solve_laplace_norm(p, N, 2 * base.L, cfg, auto_enlarge=False)
    return Stabilization(p, base.norm, dn.norm, dl.norm)


def plot_data(scan: Sequence[tuple]) -> list[dict]:
    """Curves N°, C_RT, C_F, C_H, C_S over p, from (p, N°) pairs."""
    rows = []
    for p, n in scan:
        b = bounds_row(p, n)
        rows.append({"p": p, "n_numeric": n, "c_rt": b.c_rt, "c_f": b.c_f,
                     "c_h": b.c_h, "c_s": b.c_s})
    return rows
