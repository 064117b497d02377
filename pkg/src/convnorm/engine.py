"""The improving operator B and the fixed-point iteration built on it.

For a kernel k and a feasible triple (p, q, r) the half-step

    B_r^p f = S_r( reflect( (k*f)^<beta> ) ),      beta = r' - 1,

maps the unit sphere of L_p to that of L_r and never decreases the
convolution norm: ||k * B_r^p f||_p' >= ||k * f||_r'.  The improving operator
is B = B_p^r B_r^p.  When p = r the half-step B_p^p is already a self-map of
L_p whose square is B, and the iteration runs on it directly, testing
convergence on even-numbered iterates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

from .errors import DegenerateConvolutionError, MonotonicityError, ZeroFunctionError
from .exponents import ExponentTriple
from .grid import (
    CyclicConvolver,
    GridFunction,
    SampledKernel,
    as_grid,
    lp_norm,
    reflect_array,
    signed_power,
    values_norm,
)

MONOTONE_SLACK = 1e-12


@dataclass(frozen=True)
class GaussianStart:
    """exp(-(x - center)^2 / (2 dispersion))."""

    dispersion: float = 1.0
    center: float = 0.0


@dataclass(frozen=True)
class IndicatorStart:
    """Indicator of the interval [a, b]."""

    a: float = -1.0
    b: float = 1.0


InitialCondition = Union[GaussianStart, IndicatorStart, GridFunction]


@dataclass(frozen=True)
class IterationConfig:
    tol: float = 1e-13
    max_iter: int = 10000
    initial: InitialCondition = field(default_factory=GaussianStart)
    # None selects the half-step mode automatically when p == r
    use_symmetric_tilde_b: bool | None = None
    check_monotone: bool = True
    # record ||Bf - f||_p after every full step (one extra B per step)
    log_residuals: bool = False

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter!r}")


@dataclass(frozen=True, eq=False)
class IterationReport:
    norm_estimate: float
    history: tuple
    iterations_used: int
    residual: float
    shifts: tuple
    final_f: GridFunction
    truncation_bound: float | None
    converged: bool
    triple: ExponentTriple
    tol: float
    max_iter: int
    mode: str
    half_step_history: tuple = ()
    residual_history: tuple = ()
    """Per-step residuals when ``log_residuals`` is set; logged, never asserted."""

    @property
    def N(self) -> int:
        return self.final_f.size

    @property
    def L(self) -> float:
        return self.final_f.half_length

    def to_dict(self) -> dict:
        return {
            "p": self.triple.p,
            "q": self.triple.q,
            "r": self.triple.r,
            "N": self.N,
            "L": self.L,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "mode": self.mode,
            "norm_estimate": self.norm_estimate,
            "iterations_used": self.iterations_used,
            "residual": self.residual,
            "converged": self.converged,
            "truncation_bound": self.truncation_bound,
            "history": list(self.history),
            "shifts": list(self.shifts),
            "residual_history": list(self.residual_history),
        }


def initial_function(initial: InitialCondition, like: GridFunction) -> GridFunction:
    if isinstance(initial, GridFunction):
        if not initial.same_grid(like):
            raise ValueError("initial function lives on a different grid than the kernel")
        return initial
    x = like.x
    if isinstance(initial, GaussianStart):
        vals = np.exp(-((x - initial.center) ** 2) / (2.0 * initial.dispersion))
    elif isinstance(initial, IndicatorStart):
        vals = ((x >= initial.a) & (x <= initial.b)).astype(float)
    else:
        raise TypeError(f"unsupported initial condition {initial!r}")
    f = like.with_values(vals)
    if not np.any(f.values):
        raise ZeroFunctionError(f"initial condition {initial!r} vanishes on the grid")
    return f


class _Stepper:
    """Array-level half-steps for one kernel and triple."""

    def __init__(self, k: GridFunction, triple: ExponentTriple):
        self.grid = k
        self.conv = CyclicConvolver(k)
        self.h = k.step
        self.triple = triple

    def convolve(self, f: np.ndarray) -> np.ndarray:
        return self.conv.apply_array(f)

    def transform(self, g: np.ndarray, target: float, power: float) -> np.ndarray:
        """S_target(reflect(g^<power>)) for g = k*f."""
        top = float(np.max(np.abs(g)))
        if top == 0.0:
            raise DegenerateConvolutionError(
                "k * f vanishes on the grid; choose a different initial condition"
            )
        # rescaling before the power keeps large exponents in range; S_target
        # removes the scale again
        u = reflect_array(signed_power(g / top, power))
        return u / values_norm(u, target, self.h)

    def half(self, f: np.ndarray, target: float, power: float):
        """Map f to S_target(reflect((k*f)^<power>)).

        Returns the image and ||k*f||_(power+1), the norm the image improves.
        """
        g = self.convolve(f)
        return self.transform(g, target, power), values_norm(g, power + 1.0, self.h)

    def to_r(self, f):
        return self.half(f, self.triple.r, self.triple.beta)

    def to_p(self, g):
        return self.half(g, self.triple.p, self.triple.alpha)

    def full(self, f):
        g, n_f = self.to_r(f)
        f_new, n_g = self.to_p(g)
        return f_new, n_f, n_g

    def norm_out(self, f: np.ndarray, exponent: float) -> float:
        return values_norm(self.convolve(f), exponent, self.h)


def improve_half_step(k, f: GridFunction, triple: ExponentTriple) -> GridFunction:
    """B_r^p f = S_r(reflect((k*f)^<beta>)); unit r-norm output."""
    kg = as_grid(k)
    u, _ = _Stepper(kg, triple).to_r(f.values)
    return f.with_values(u)


def improve(k, f: GridFunction, triple: ExponentTriple) -> GridFunction:
    """Bf = B_p^r B_r^p f; unit p-norm output with ||k*Bf|| >= ||k*f||."""
    kg = as_grid(k)
    out, _, _ = _Stepper(kg, triple).full(f.values)
    return f.with_values(out)


def shift_quotient_distance(a: np.ndarray, b: np.ndarray, p: float, h: float,
                            chunk: int = 256) -> tuple[float, int]:
    """min over cyclic shifts s of ||roll(a, s) - b||_p, and the minimizing s."""
    n = a.size
    best, best_s = math.inf, 0
    base = np.arange(n)
    for start in range(0, n, chunk):
        shifts = np.arange(start, min(start + chunk, n))
        rolled = a[(base[None, :] - shifts[:, None]) % n]
        d = np.abs(rolled - b[None, :])
        top = d.max(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            scaled = np.where(top[:, None] > 0, d / np.where(top > 0, top, 1)[:, None], 0.0)
        vals = top * (h * np.sum(scaled ** p, axis=1)) ** (1.0 / p)
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, best_s = float(vals[i]), int(shifts[i])
    return best, best_s


def residual(k, f: GridFunction, triple: ExponentTriple) -> float:
    """Shift-quotient residual min_s ||T_s Bf - f||_p of the fixed-point
    equation Bf = f."""
    bf = improve(k, f, triple)
    d, _ = shift_quotient_distance(bf.values, f.values, triple.p, f.step)
    return d


def _argmax_shift(values: np.ndarray, origin: int) -> int:
    return origin - int(np.argmax(np.abs(values)))


def iterate(k, triple: ExponentTriple, cfg: IterationConfig | None = None) -> IterationReport:
    """Run the improving iteration from ``cfg.initial`` until the increment of
    ||k*f_n||^(r') drops below ``cfg.tol`` or ``cfg.max_iter`` steps are used.

    After every step the iterate is cyclically shifted so that its maximal
    modulus sits at x = 0.  Not converging within ``max_iter`` is reported,
    not raised.
    """
    cfg = cfg or IterationConfig()
    kg = as_grid(k)
    truncation = k.truncation_bound if isinstance(k, SampledKernel) else None
    symmetric = triple.symmetric if cfg.use_symmetric_tilde_b is None else cfg.use_symmetric_tilde_b
    if symmetric and not triple.symmetric:
        raise ValueError("the half-step mode requires p == r")

    st = _Stepper(kg, triple)
    f0 = initial_function(cfg.initial, kg)
    f = f0.values / lp_norm(f0, triple.p)
    origin = kg.origin_index
    h = kg.step
    r_conj = triple.r_conj

    history: list[float] = []
    half_hist: list[float] = []
    shifts: list[float] = []
    residuals: list[float] = []
    converged = False
    steps = 0

    def check(prev, new):
        if cfg.check_monotone and new < prev - MONOTONE_SLACK * max(1.0, prev):
            raise MonotonicityError(f"norm decreased from {prev!r} to {new!r} at step {steps}")

    def log_residual():
        if cfg.log_residuals:
            residuals.append(residual(kg, kg.with_values(f), triple))

    def recenter(f_new):
        s = _argmax_shift(f_new, origin)
        shifts.append(s * h)
        return np.roll(f_new, s)

    # k*f of the current iterate is computed once and serves both the
    # history entry and the next step
    if symmetric:
        mode = "half-step"
        while True:
            g = st.convolve(f)
            history.append(values_norm(g, r_conj, h))
            if steps:
                check(history[-2], history[-1])
            if steps % 2 == 0:
                log_residual()
            if steps >= 2 and steps % 2 == 0:
                if history[-1] ** r_conj - history[-3] ** r_conj < cfg.tol:
                    converged = True
                    break
            if steps >= cfg.max_iter:
                break
            f = recenter(st.transform(g, triple.p, triple.alpha))
            steps += 1
    else:
        mode = "full"
        while True:
            g = st.convolve(f)
            history.append(values_norm(g, r_conj, h))
            half_hist.append(history[-1])
            log_residual()
            if steps:
                check(half_hist[-2], half_hist[-1])
                check(history[-2], history[-1])
                if history[-1] ** r_conj - history[-2] ** r_conj < cfg.tol:
                    converged = True
                    break
            if steps >= cfg.max_iter:
                break
            u = st.transform(g, triple.r, triple.beta)
            gu = st.convolve(u)
            half_hist.append(values_norm(gu, triple.p_conj, h))
            check(half_hist[-2], half_hist[-1])
            f = recenter(st.transform(gu, triple.p, triple.alpha))
            steps += 1

    final = kg.with_values(f)
    res = residual(kg, final, triple)
    return IterationReport(
        norm_estimate=history[-1],
        history=tuple(history),
        iterations_used=steps,
        residual=res,
        shifts=tuple(shifts),
        final_f=final,
        truncation_bound=truncation,
        converged=converged,
        triple=triple,
        tol=cfg.tol,
        max_iter=cfg.max_iter,
        mode=mode,
        half_step_history=tuple(half_hist),
        residual_history=tuple(residuals),
    )


def multistart(k, triple: ExponentTriple, starts: Sequence[InitialCondition],
               cfg: IterationConfig | None = None) -> list[IterationReport]:
    """Independent runs from several initial conditions (the limit may in
    principle depend on the start)."""
    cfg = cfg or IterationConfig()
    return [iterate(k, triple, replace(cfg, initial=s)) for s in starts]
