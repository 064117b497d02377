"""Exponent algebra for Young's relation 1/p + 1/q + 1/r = 2.

Infinity is represented by ``math.inf``; only :func:`conjugate` accepts or
produces it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, InfeasibleExponentsError

FEASIBILITY_TOL = 1e-12

INF = math.inf


def conjugate(x: float) -> float:
    """Return the Hoelder conjugate x' with 1/x + 1/x' = 1."""
    if math.isnan(x) or x < 1:
        raise DomainError(f"conjugate exponent needs x >= 1, got {x!r}")
    if x == 1:
        return INF
    if math.isinf(x):
        return 1.0
    return x / (x - 1.0)


@dataclass(frozen=True)
class ExponentTriple:
    """A feasible triple (p, q, r) together with its derived exponents.

    The operator f -> k * f maps L_p to L_{r'} when k is in L_q.
    """

    p: float
    q: float
    r: float

    def __post_init__(self):
        p, q, r = self.p, self.q, self.r
        if not (1 < p < INF):
            raise InfeasibleExponentsError(f"p must lie in (1, inf), got {p!r}")
        if not (1 <= q < INF):
            raise InfeasibleExponentsError(f"q must lie in [1, inf), got {q!r}")
        if not (1 < r < INF):
            raise InfeasibleExponentsError(f"r must lie in (1, inf), got {r!r}")
        resid = 1 / p + 1 / q + 1 / r - 2
        if abs(resid) > FEASIBILITY_TOL:
            raise InfeasibleExponentsError(
                f"1/p + 1/q + 1/r - 2 = {resid:.3e} for ({p}, {q}, {r})"
            )

    @property
    def p_conj(self) -> float:
        return conjugate(self.p)

    @property
    def q_conj(self) -> float:
        return conjugate(self.q)

    @property
    def r_conj(self) -> float:
        return conjugate(self.r)

    @property
    def alpha(self) -> float:
        """p'/p, the power used when mapping back into L_p."""
        return 1.0 / (self.p - 1.0)

    @property
    def beta(self) -> float:
        """r'/r, the power used when mapping into L_r."""
        return 1.0 / (self.r - 1.0)

    @property
    def gamma(self) -> float:
        """r'/p; exceeds 1 whenever q > 1."""
        return self.r_conj / self.p

    @property
    def symmetric(self) -> bool:
        return abs(self.p - self.r) <= FEASIBILITY_TOL

    def swapped(self) -> "ExponentTriple":
        """The transposed problem, with the roles of p and r exchanged."""
        return ExponentTriple(self.r, self.q, self.p)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p, self.q, self.r)


def complete_triple(p: float, q: float) -> ExponentTriple:
    """Solve Young's relation for r given p and q.

    Raises InfeasibleExponentsError when 1/p + 1/q <= 1, i.e. when r' would
    not be finite.
    """
    if not (p > 1) or math.isinf(p):
        raise InfeasibleExponentsError(f"p must lie in (1, inf), got {p!r}")
    if not (q >= 1) or math.isinf(q):
        raise InfeasibleExponentsError(f"q must lie in [1, inf), got {q!r}")
    inv_r = 2.0 - 1.0 / p - 1.0 / q
    if not (0 < inv_r < 1):
        raise InfeasibleExponentsError(
            f"1/p + 1/q = {1 / p + 1 / q:.6g} must exceed 1 (p={p}, q={q})"
        )
    return ExponentTriple(p, q, 1.0 / inv_r)


def laplace_triple(p: float) -> ExponentTriple:
    """The triple (p, p'/2, p) arising from the log substitution of the
    Laplace transform; valid for 1 < p <= 2."""
    if not (1 < p <= 2):
        raise DomainError(f"Laplace configuration needs 1 < p <= 2, got {p!r}")
    return complete_triple(p, conjugate(p) / 2.0)
