"""Operator norms of convolutions between Lebesgue spaces, computed by a
monotone nonlinear fixed-point iteration, with an application to the norm
of the Laplace transform from L_p to L_p'."""

from .bounds import (
    beckner_constant,
    beckner_young_bound,
    bound_fourier,
    bound_hardy,
    bound_riesz_thorin,
    bound_setterqvist,
    bounds_row,
    empirical_gap,
)
from .engine import GaussianStart, IndicatorStart, IterationConfig, IterationReport, improve, iterate
from .exponents import ExponentTriple, complete_triple, conjugate, laplace_triple
from .grid import (
    Chirped,
    Discrete,
    Gaussian,
    GridFunction,
    LaplaceHp,
    Tabulated,
    cyclic_convolve,
    lp_norm,
    sample_kernel,
    signed_power,
)
from .laplace import reproduce_table1, solve_laplace_norm, sweep_minimum

__version__ = "0.1.0"
