"""Closed-form upper bounds for convolution norms and for the norm N(p) of
the Laplace transform from L_p(R+) to L_p'(R+).

All constants are evaluated in log space; the limits p -> 1 (p' -> inf) and
p -> 2 are substituted analytically.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import DomainError, ZeroFunctionError
from .exponents import ExponentTriple, conjugate
from .grid import as_grid, lp_norm


def _inv_conj(m: float) -> float:
    """1/m' = 1 - 1/m, exact at m = 1 and m = inf."""
    return 0.0 if m == 1 else 1.0 - 1.0 / m


def _xlogx_over(m: float) -> float:
    """log(m)/m with the limit 0 at m = inf."""
    return 0.0 if math.isinf(m) else math.log(m) / m


def beckner_constant(m: float) -> float:
    """A_m = (m^(1/m) / m'^(1/m'))^(1/2); equal to 1 at m in {1, 2, inf}."""
    if math.isnan(m) or m < 1:
        raise DomainError(f"Beckner constant needs m >= 1, got {m!r}")
    if m in (1.0, 2.0) or math.isinf(m):
        return 1.0
    return math.exp(0.5 * (_xlogx_over(m) - _xlogx_over(conjugate(m))))


def _check_p(p: float) -> None:
    if not (1 <= p <= 2):
        raise DomainError(f"Laplace bounds are defined for 1 <= p <= 2, got {p!r}")


def bound_riesz_thorin(p: float) -> float:
    """pi^(1/p'): interpolation between N(1) = 1 and N(2) = sqrt(pi)."""
    _check_p(p)
    if p == 2:
        return math.sqrt(math.pi)
    return math.exp(_inv_conj(p) * math.log(math.pi))


def bound_fourier(p: float) -> float:
    """pi^(1/p') A_p, through the sharp Fourier constant."""
    return bound_riesz_thorin(p) * beckner_constant(p)


def bound_hardy(p: float) -> float:
    """(2 pi/p')^(1/p'): Young's inequality after the log substitution."""
    _check_p(p)
    t = _inv_conj(p)
    if t == 0:
        return 1.0
    return math.exp(t * math.log(2.0 * math.pi * t))


def bound_setterqvist(p: float) -> float:
    """C_H(p) A_p^2 A_q with q = p'/2 (Young's inequality in Beckner's sharp
    form after the log substitution).  Equals sqrt(pi) at p = 2."""
    _check_p(p)
    q = math.inf if p == 1 else conjugate(p) / 2.0
    return bound_hardy(p) * beckner_constant(p) ** 2 * beckner_constant(q)


def bound_setterqvist_explicit(p: float) -> float:
    """(pi(p-1))^(1/p') (p(2-p))^(1/p - 1/2), the expanded form of
    :func:`bound_setterqvist` (singular at the endpoints)."""
    if not (1 < p < 2):
        raise DomainError(f"explicit form needs 1 < p < 2, got {p!r}")
    return (math.pi * (p - 1)) ** (1 - 1 / p) * (p * (2 - p)) ** (1 / p - 0.5)


def empirical_gap(p: float) -> float:
    """(p-1)(2-p)/8, the observed distance between C_S(p) and N(p)."""
    return (p - 1.0) * (2.0 - p) / 8.0


@dataclass
class BoundsRow:
    p: float
    c_rt: float
    c_f: float
    c_h: float
    c_s: float
    empirical_gap: float
    n_numeric: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


BOUNDS_COLUMNS = ("p", "c_rt", "c_f", "c_h", "c_s", "empirical_gap")


def bounds_row(p: float, n_numeric: float | None = None) -> BoundsRow:
    return BoundsRow(
        p=p,
        c_rt=bound_riesz_thorin(p),
        c_f=bound_fourier(p),
        c_h=bound_hardy(p),
        c_s=bound_setterqvist(p),
        empirical_gap=empirical_gap(p),
        n_numeric=n_numeric,
    )


@dataclass(frozen=True)
class YoungBounds:
    young: float
    """Plain Young bound ||k||_q."""
    beckner: float
    """A_p A_q A_r ||k||_q (sharp on R for Gaussian kernels)."""


def beckner_young_bound(k, triple: ExponentTriple) -> YoungBounds:
    """Young's bound and its Beckner refinement for the kernel on its grid."""
    norm_k = lp_norm(as_grid(k), triple.q)
    if norm_k == 0:
        raise ZeroFunctionError("kernel is identically zero")
    factor = (beckner_constant(triple.p) * beckner_constant(triple.q)
              * beckner_constant(triple.r))
    return YoungBounds(young=norm_k, beckner=factor * norm_k)
