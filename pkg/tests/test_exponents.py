import math

import pytest
from hypothesis import given, strategies as st

from convnorm.errors import DomainError, InfeasibleExponentsError
from convnorm.exponents import ExponentTriple, complete_triple, conjugate, laplace_triple


@pytest.mark.parametrize("x, expected", [(2.0, 2.0), (1.0, math.inf), (1.5, 3.0), (math.inf, 1.0)])
def test_conjugate_values(x, expected):
    assert conjugate(x) == pytest.approx(expected)


def test_conjugate_rejects_below_one():
    with pytest.raises(DomainError):
        conjugate(0.5)


@given(st.floats(min_value=1.0001, max_value=1e6))
def test_conjugate_is_involution(x):
    assert conjugate(conjugate(x)) == pytest.approx(x, rel=1e-9)
    assert 1 / x + 1 / conjugate(x) == pytest.approx(1.0, abs=1e-12)


def test_complete_triple_examples():
    t = complete_triple(1.5, 1.5)
    assert t.r == pytest.approx(1.5)
    assert t.r_conj == pytest.approx(3.0)
    assert t.gamma == pytest.approx(2.0)
    assert complete_triple(2.0, 1.0).r == pytest.approx(2.0)


@given(st.floats(min_value=1.01, max_value=1.99))
def test_laplace_configuration_gives_r_equal_p(p):
    t = laplace_triple(p)
    assert t.q == pytest.approx(conjugate(p) / 2)
    assert t.r == pytest.approx(p, rel=1e-12)
    assert t.symmetric


feasible = st.tuples(st.floats(1.01, 8.0), st.floats(1.0, 8.0)).filter(
    lambda pq: 0.02 < 2 - 1 / pq[0] - 1 / pq[1] < 0.98)


@given(feasible)
def test_triple_invariants(pq):
    t = complete_triple(*pq)
    assert 1 / t.p + 1 / t.q + 1 / t.r == pytest.approx(2.0, abs=1e-12)
    assert 1 / t.p + 1 / t.q == pytest.approx(1 + 1 / t.r_conj, abs=1e-12)
    # x' >= z for every pair of distinct roles
    exps = {"p": (t.p, t.p_conj), "q": (t.q, t.q_conj), "r": (t.r, t.r_conj)}
    for x, (_, xc) in exps.items():
        for z, (zv, _) in exps.items():
            if x != z:
                assert xc >= zv * (1 - 1e-9)
    assert t.alpha == pytest.approx(t.p_conj - 1)
    assert t.beta == pytest.approx(t.r_conj - 1)
    if t.q > 1 + 1e-9:
        assert t.gamma > 1
    # the relation is symmetric in p and r for fixed q
    s = complete_triple(t.r, t.q)
    assert s.r == pytest.approx(t.p, rel=1e-9)
    assert t.swapped().as_tuple() == (t.r, t.q, t.p)


def test_pairwise_equality_iff_unit_exponent():
    t = complete_triple(1.5, 1.0)
    assert t.p_conj == pytest.approx(t.r)
    assert t.r_conj == pytest.approx(t.p)
    u = complete_triple(1.5, 1.2)
    gaps = [u.p_conj - u.r, u.r_conj - u.p, u.p_conj - u.q, u.r_conj - u.q]
    assert min(gaps) > 1e-3


def test_min_conjugate_can_be_below_max_exponent():
    # only the pairwise form holds; the set-wise form fails here
    t = complete_triple(1.1, 1.1)
    assert min(t.p_conj, t.q_conj, t.r_conj) < max(t.p, t.q, t.r)


@pytest.mark.parametrize("p, q", [(3.0, 3.0), (2.0, 2.0), (4.0, 1.5)])
def test_infeasible_pairs(p, q):
    with pytest.raises(InfeasibleExponentsError):
        complete_triple(p, q)


def test_triple_validates_relation():
    with pytest.raises(DomainError):
        ExponentTriple(1.5, 1.5, 2.0)
    with pytest.raises(DomainError):
        laplace_triple(2.5)
