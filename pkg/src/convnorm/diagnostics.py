"""Concentration diagnostics for grid functions and validators for the
elementary inequalities behind them.

Windows live on the circle: a window of n consecutive nodes (wrapping
around the cut at x = +-L) covers the cells [x_j - h/2, x_j + h/2) and has
length n*h.  Endpoints are therefore resolved to within a cell, so reported
diameters carry an additive uncertainty of at most 2h relative to the
continuum quantity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateWindowError,
    DomainError,
    ParametersInfeasibleError,
    PreconditionError,
    ValidatorFailedError,
)
from .exponents import ExponentTriple
from .grid import GridFunction, as_grid, cyclic_convolve, lp_norm, lp_norm_power, signed_power

DIAMETER_UNCERTAINTY_CELLS = 2


@dataclass(frozen=True)
class NearSupport:
    a: float
    b: float
    delta: float
    p: float
    start: int
    """Array index of the first node in the window."""
    nodes: int
    mass: float
    """p-mass carried by the window (>= total - delta)."""

    @property
    def length(self) -> float:
        return self.b - self.a


def _cell_masses(f: GridFunction, p: float) -> np.ndarray:
    return f.step * np.abs(f.values) ** p


def _minimal_window(w: np.ndarray, target: float) -> tuple[int, int]:
    """Shortest cyclic window with sum >= target, leftmost start among ties.

    Two pointers over the doubled prefix sums; O(N).
    """
    n = w.size
    csum = np.concatenate(([0.0], np.cumsum(np.concatenate((w, w)))))
    best_len, best_start = n + 1, 0
    j = 0
    for i in range(n):
        if j < i:
            j = i
        while j - i < n and csum[j] - csum[i] < target:
            j += 1
        if csum[j] - csum[i] >= target and j - i < best_len:
            best_len, best_start = j - i, i
    if best_len > n:
        # rounding in the prefix sums; the full circle always qualifies
        best_len, best_start = n, 0
    return best_start, best_len


def _check_delta(delta: float) -> None:
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta!r}")


def near_support(f: GridFunction, delta: float, p: float) -> NearSupport:
    """The shortest window carrying all but ``delta`` of the p-mass of f."""
    _check_delta(delta)
    w = _cell_masses(f, p)
    total = float(w.sum())
    if delta >= total:
        raise DegenerateWindowError(
            f"delta={delta!r} is not below the total p-mass {total!r}"
        )
    start, n = _minimal_window(w, total - delta)
    h = f.step
    a = float(f.x[start]) - h / 2
    idx = (start + np.arange(n)) % f.size
    return NearSupport(a, a + n * h, delta, p, start, n, float(w[idx].sum()))


def delta_diameter(f: GridFunction, delta: float, p: float) -> float:
    """Length of the delta-near-support; 0 when delta >= ||f||_p^p."""
    _check_delta(delta)
    if delta >= lp_norm_power(f, p):
        return 0.0
    return near_support(f, delta, p).length


def center_shift(f: GridFunction, delta: float, p: float) -> float:
    """Translation a such that T_a f splits its near-support mass equally on
    both sides of the origin (to within one cell)."""
    ns = near_support(f, delta, p)
    w = _cell_masses(f, p)
    idx = (ns.start + np.arange(ns.nodes)) % f.size
    cw = np.cumsum(w[idx])
    half = cw[-1] / 2.0
    m = int(np.searchsorted(cw, half))
    before = cw[m - 1] if m > 0 else 0.0
    frac = (half - before) / w[idx][m] if w[idx][m] > 0 else 0.5
    c = ns.a + (m + frac) * f.step
    a = -c
    # bring the shift into [-L, L)
    return float((a + f.half_length) % f.period - f.half_length)


def recenter(f: GridFunction, delta: float, p: float) -> tuple[GridFunction, int]:
    """Apply :func:`center_shift` rounded to whole nodes."""
    nodes = int(round(center_shift(f, delta, p) / f.step))
    return f.roll(nodes), nodes


def side_masses(f: GridFunction, delta: float, p: float) -> tuple[float, float]:
    """p-mass of the near-support on the negative and positive side of 0.

    The origin node's cell is split evenly between the two sides.
    """
    ns = near_support(f, delta, p)
    w = _cell_masses(f, p)
    idx = (ns.start + np.arange(ns.nodes)) % f.size
    x = ns.a + f.step * (np.arange(ns.nodes) + 0.5)
    x = (x + f.half_length) % f.period - f.half_length
    wi = w[idx]
    left = wi[x < -f.step / 4].sum() + 0.5 * wi[np.abs(x) <= f.step / 4].sum()
    right = wi[x > f.step / 4].sum() + 0.5 * wi[np.abs(x) <= f.step / 4].sum()
    return float(left), float(right)


# -- concentration estimate for near-maximizers ---------------------------------


@dataclass(frozen=True)
class Corollary39Params:
    epsilon: float
    delta: float
    rho: float
    c: float
    gamma: float


def concentration_params(triple: ExponentTriple, epsilon: float, norm_k: float) -> Corollary39Params:
    """delta, rho, c tied to epsilon for near-maximizers of a kernel with
    operator norm ``norm_k``."""
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon!r}")
    g = triple.gamma
    if not g > 1:
        raise ParametersInfeasibleError(f"estimate needs gamma = r'/p > 1 (q > 1), got {g!r}")
    rc = triple.r_conj
    delta = 4.0 * rc * epsilon / (1.0 - 2.0 ** (1.0 - g))
    rho = (norm_k * epsilon) ** triple.q
    c = 4.0 * (epsilon * rc) ** (-1.0 / g)
    return Corollary39Params(epsilon, delta, rho, c, g)


@dataclass(frozen=True)
class ConcentrationCheck:
    lhs: float
    rhs: float
    holds: bool
    params: Corollary39Params
    measured_epsilon: float
    trivial: bool
    """True when delta >= ||f||_p^p, so the left side is 0 by convention."""
    uncertainty: float = 0.0


def check_corollary_3_9(k, f: GridFunction, triple: ExponentTriple, epsilon: float,
                        norm_k: float) -> ConcentrationCheck:
    """Compare D_delta^p(f) with c * D_rho^q(k) for an epsilon-maximizer f.

    Raises PreconditionError when f is not an epsilon-maximizer relative to
    ``norm_k`` and ParametersInfeasibleError when rho exhausts the kernel's
    q-mass (the right side would vanish).
    """
    kg = as_grid(k)
    params = concentration_params(triple, epsilon, norm_k)
    fn = lp_norm(f, triple.p)
    if abs(fn - 1.0) > 1e-8:
        raise PreconditionError(f"f must have unit p-norm, got {fn!r}")
    value = lp_norm(cyclic_convolve(kg, f), triple.r_conj)
    measured = max(0.0, 1.0 - value / norm_k)
    if measured > epsilon:
        raise PreconditionError(
            f"f is not an epsilon-maximizer: deficiency {measured:.3e} exceeds {epsilon:.3e}"
        )
    if params.rho >= lp_norm_power(kg, triple.q):
        raise ParametersInfeasibleError(
            f"rho={params.rho:.3e} is not below ||k||_q^q; the kernel diameter would be 0"
        )
    lhs = delta_diameter(f, params.delta, triple.p)
    rhs = params.c * delta_diameter(kg, params.rho, triple.q)
    # cell resolution on both sides
    unc = DIAMETER_UNCERTAINTY_CELLS * f.step * (1.0 + params.c)
    trivial = params.delta >= lp_norm_power(f, triple.p)
    return ConcentrationCheck(lhs, rhs, lhs <= rhs, params, measured, trivial, unc)


# -- tightness over a family -------------------------------------------------------


@dataclass(frozen=True)
class TightnessReport:
    delta: float
    diameters: tuple
    sup_late: float
    """Largest diameter over the second half of the family."""
    bounded: bool


def tightness_report(family: Sequence[GridFunction], delta: float, p: float) -> TightnessReport:
    """Does the delta-diameter stay bounded along a stored family of runs?

    "Bounded" means the late diameters stay below half the circle, the
    largest value a concentrated function can have unambiguously.
    """
    ds = tuple(delta_diameter(f, delta, p) for f in family)
    late = ds[len(ds) // 2:] or ds
    sup_late = max(late) if late else 0.0
    limit = min(f.period for f in family) / 2 if family else math.inf
    return TightnessReport(delta, ds, sup_late, sup_late < limit)


# -- validators -------------------------------------------------------------------

_REL_TOL = 1e-12


@dataclass
class ValidatorReport:
    name: str
    samples: int
    violations: int
    worst_slack: float
    """Smallest (rhs - lhs) / max(rhs, tiny) observed."""
    seed: int
    counterexample: dict | None = field(default=None)

    def as_dict(self) -> dict:
        return {"name": self.name, "samples": self.samples, "violations": self.violations,
                "worst_slack": self.worst_slack, "seed": self.seed,
                "counterexample": self.counterexample}


def _finish(name, lhs, rhs, samples, seed, describe, raise_on_violation):
    slack = (rhs - lhs) / np.maximum(np.abs(rhs), 1e-300)
    bad = lhs > rhs + _REL_TOL * np.abs(rhs) + 1e-300
    nbad = int(np.count_nonzero(bad))
    worst = int(np.argmin(slack))
    counter = describe(int(np.flatnonzero(bad)[0])) if nbad else None
    report = ValidatorReport(name, samples, nbad, float(slack[worst]), seed, counter)
    if nbad and raise_on_violation:
        raise ValidatorFailedError(f"{name}: {nbad} violations", counter)
    return report


def lemma_3_1_sides(u, lam, gamma):
    """u^g + (1-u)^g and 1 - 2 lam (1 - 2^(1-g))."""
    u, lam, gamma = (np.asarray(a, dtype=float) for a in (u, lam, gamma))
    lhs = u ** gamma + (1.0 - u) ** gamma
    rhs = 1.0 - 2.0 * lam * (1.0 - 2.0 ** (1.0 - gamma))
    return lhs, rhs


def lemma_4_1_sides(u, v, gamma):
    """|u^<g> - v^<g>| and its bound: 2^(1-g)|u-v|^g for g <= 1,
    g |u-v| max(|u|,|v|)^(g-1) for g > 1."""
    u = np.asarray(u, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128)
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), np.broadcast(u, v).shape)
    lhs = np.abs(_signed_power_vec(u, gamma) - _signed_power_vec(v, gamma))
    d = np.abs(u - v)
    m = np.maximum(np.abs(u), np.abs(v))
    with np.errstate(divide="ignore", invalid="ignore"):
        small = 2.0 ** (1.0 - gamma) * d ** gamma
        large = gamma * d * np.where(m > 0, m, 1.0) ** (gamma - 1.0)
    rhs = np.where(gamma <= 1, small, np.where(m > 0, large, 0.0))
    return lhs, rhs


def _signed_power_vec(z, gamma):
    a = np.abs(z)
    out = np.zeros_like(z)
    nz = a > 0
    out[nz] = np.conj(z[nz]) * a[nz] ** (gamma[nz] - 1.0)
    return out


def validate_lemma_3_1(samples: int = 10 ** 6, seed: int = 0,
                       raise_on_violation: bool = True) -> ValidatorReport:
    """Random (u, lambda, gamma) with gamma in (1, 8], lambda in (0, 1/2),
    u in [lambda, 1 - lambda]."""
    if samples < 1:
        raise DomainError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    gamma = 8.0 - 7.0 * rng.random(samples)            # (1, 8]
    lam = 0.5 * (1.0 - rng.random(samples))            # (0, 1/2]
    lam = np.minimum(lam, np.nextafter(0.5, 0))
    u = lam + (1.0 - 2.0 * lam) * rng.random(samples)
    lhs, rhs = lemma_3_1_sides(u, lam, gamma)
    return _finish("lemma_3_1", lhs, rhs, samples, seed,
                   lambda i: {"u": float(u[i]), "lambda": float(lam[i]), "gamma": float(gamma[i])},
                   raise_on_violation)


def _random_complex(rng, n):
    mag = 10.0 ** rng.uniform(-6, 6, n)
    return mag * np.exp(2j * np.pi * rng.random(n))


def _pairs(rng, n):
    """Half independent pairs, half near-coincident pairs (the delicate regime)."""
    u = _random_complex(rng, n)
    v = _random_complex(rng, n)
    close = rng.random(n) < 0.5
    eps = 10.0 ** rng.uniform(-8, 0, n) * np.abs(u)
    v = np.where(close, u + eps * np.exp(2j * np.pi * rng.random(n)), v)
    return u, v


def validate_lemma_4_1(samples: int = 10 ** 6, seed: int = 0,
                       raise_on_violation: bool = True) -> tuple[ValidatorReport, ValidatorReport]:
    """Parts (a) gamma in (0, 1] and (b) gamma in (1, 8] on random complex
    pairs; returns one report per part."""
    if samples < 1:
        raise DomainError("samples must be >= 1")
    rng_a, rng_b = np.random.default_rng(seed).spawn(2)
    u, v = _pairs(rng_a, samples)
    ga = 1.0 - rng_a.random(samples)                   # (0, 1]
    lhs, rhs = lemma_4_1_sides(u, v, ga)
    rep_a = _finish("lemma_4_1a", lhs, rhs, samples, seed,
                    lambda i: {"u": str(u[i]), "v": str(v[i]), "gamma": float(ga[i])},
                    raise_on_violation)
    u, v = _pairs(rng_b, samples)
    gb = 8.0 - 7.0 * rng_b.random(samples)             # (1, 8]
    lhs, rhs = lemma_4_1_sides(u, v, gb)
    rep_b = _finish("lemma_4_1b", lhs, rhs, samples, seed,
                    lambda i: {"u": str(u[i]), "v": str(v[i]), "gamma": float(gb[i])},
                    raise_on_violation)
    return rep_a, rep_b
