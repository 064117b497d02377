import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from convnorm.bounds import (
    BOUNDS_COLUMNS,
    beckner_constant,
    beckner_young_bound,
    bound_fourier,
    bound_hardy,
    bound_riesz_thorin,
    bound_setterqvist,
    bound_setterqvist_explicit,
    bounds_row,
    empirical_gap,
)
from convnorm.errors import DomainError, ZeroFunctionError
from convnorm.exponents import ExponentTriple, complete_triple, laplace_triple
from convnorm.grid import Gaussian, GridFunction, LaplaceHp, sample_kernel

from reference import REFERENCE_CS, TABLE_P


def test_beckner_constant_special_values():
    assert beckner_constant(2.0) == 1.0
    assert beckner_constant(1.0) == 1.0
    assert beckner_constant(math.inf) == 1.0
    assert beckner_constant(1.0 + 1e-12) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(DomainError):
        beckner_constant(0.9)


def test_beckner_constant_direct_formula():
    m = 4.0 / 3.0
    direct = ((4 / 3) ** (3 / 4) / 4 ** (1 / 4)) ** 0.5
    assert beckner_constant(m) == pytest.approx(direct, rel=1e-14)


@given(st.floats(1.001, 50.0))
def test_beckner_constant_two_paths(m):
    mc = m / (m - 1)
    direct = (m ** (1 / m) / mc ** (1 / mc)) ** 0.5
    assert beckner_constant(m) == pytest.approx(direct, rel=1e-14)
    assert beckner_constant(m) * beckner_constant(mc) == pytest.approx(1.0, rel=1e-13)
    if m <= 2:
        assert 0 < beckner_constant(m) <= 1.0
    else:
        assert beckner_constant(m) > 1.0


def test_closed_form_endpoints():
    assert bound_riesz_thorin(2.0) == pytest.approx(math.sqrt(math.pi), abs=1e-12)
    assert bound_riesz_thorin(1.0) == 1.0
    assert bound_hardy(2.0) == pytest.approx(math.sqrt(math.pi), abs=1e-12)
    assert bound_setterqvist(2.0) == pytest.approx(math.sqrt(math.pi), abs=1e-12)
    assert bound_setterqvist(1.0) == 1.0
    for f in (bound_riesz_thorin, bound_fourier, bound_hardy, bound_setterqvist):
        with pytest.raises(DomainError):
            f(2.5)
        with pytest.raises(DomainError):
            f(0.5)


@pytest.mark.parametrize("p", TABLE_P)
def test_setterqvist_column(p):
    assert bound_setterqvist(p) == pytest.approx(REFERENCE_CS[p], abs=5e-5)
    assert bound_setterqvist(p) == pytest.approx(bound_setterqvist_explicit(p), rel=1e-13)


@pytest.mark.parametrize("p", np.linspace(1.001, 1.999, 101))
def test_bound_chain(p):
    assert bound_setterqvist(p) <= bound_hardy(p)
    assert bound_fourier(p) <= bound_riesz_thorin(p)
    row = bounds_row(p)
    for v in (row.c_rt, row.c_f, row.c_h, row.c_s):
        assert 0 < v < math.inf


def test_empirical_gap():
    assert empirical_gap(1.0) == 0.0
    assert empirical_gap(2.0) == 0.0
    assert empirical_gap(1.5) == 0.03125
    ps = np.linspace(1, 2, 201)
    gaps = np.array([empirical_gap(p) for p in ps])
    np.testing.assert_allclose(gaps, gaps[::-1], atol=1e-15)
    assert gaps.max() == pytest.approx(1 / 32)
    assert ps[np.argmax(gaps)] == pytest.approx(1.5)


def test_bounds_row_columns():
    d = bounds_row(1.5).as_dict()
    assert set(BOUNDS_COLUMNS) <= set(d)
    assert d["c_s"] == pytest.approx(1.10803, abs=5e-5)


def test_beckner_young_bound_is_below_young():
    rng = np.random.default_rng(0)
    k = GridFunction(rng.standard_normal(64), 4.0)
    for pq in [(1.5, 1.5), (1.3, 1.2), (2.0, 1.0), (1.2, 1.8)]:
        b = beckner_young_bound(k, complete_triple(*pq))
        assert b.beckner <= b.young * (1 + 1e-15)
    with pytest.raises(ZeroFunctionError):
        beckner_young_bound(GridFunction.zeros(8, 1.0), complete_triple(1.5, 1.5))


@pytest.mark.parametrize("p", [1.2, 1.5, 1.8])
def test_beckner_young_bound_for_laplace_kernel(p):
    t = laplace_triple(p)
    k = sample_kernel(LaplaceHp(p), 2048, 64.0, q=t.q)
    assert beckner_young_bound(k, t).beckner == pytest.approx(bound_setterqvist(p), abs=2e-5)


def test_beckner_young_bound_for_gaussian():
    t = ExponentTriple(1.5, 1.5, 1.5)
    k = sample_kernel(Gaussian(1.0), 512, 16.0)
    norm_q = integrate.quad(lambda x: np.exp(-1.5 * x ** 2), -np.inf, np.inf,
                            epsabs=0, epsrel=1e-13)[0] ** (1 / 1.5)
    expected = beckner_constant(1.5) ** 3 * norm_q
    assert beckner_young_bound(k, t).beckner == pytest.approx(expected, rel=1e-12)
