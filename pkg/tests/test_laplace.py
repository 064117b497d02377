import math

import numpy as np
import pytest

from convnorm import laplace
from convnorm.bounds import bound_fourier, bound_hardy, bound_riesz_thorin, bound_setterqvist
from convnorm.errors import CrossCheckError, DomainError
from convnorm.exponents import conjugate
from convnorm.grid import LaplaceHp, tail_mass
from convnorm.laplace import (
    choose_half_length,
    crosscheck_direct_quadrature,
    direct_laplace_ratio,
    golden_section_minimize,
    is_unimodal,
    plot_data,
    reproduce_table1,
    solve_laplace_norm,
    sweep_minimum,
)

from conftest import laplace_run
from reference import MIN_N, MIN_P, REFERENCE_N


@pytest.mark.parametrize("p, tol", [(1.4, 1e-3), (1.9, 1e-3), (1.05, 2e-3)])
def test_solve_matches_reference(p, tol):
    run = laplace_run(p)
    assert run.norm == pytest.approx(REFERENCE_N[p], abs=tol)
    assert run.report.converged


@pytest.mark.parametrize("p", [1.05, 1.5, 1.9])
def test_run_invariants(p):
    run = laplace_run(p)
    assert run.triple.q == pytest.approx(conjugate(p) / 2)
    assert run.triple.r == pytest.approx(p)
    assert run.bounds.n_numeric == run.norm
    assert run.norm <= run.bounds.c_s + 2e-3
    # the Laplace maximizer is the reflected iterate
    assert np.array_equal(run.maximizer().values[1:], run.report.final_f.values[:0:-1])


def test_half_length_enlargement():
    for p in (1.05, 1.5, 1.95):
        L = choose_half_length(p)
        q = conjugate(p) / 2
        assert L >= 16.0
        assert tail_mass(LaplaceHp(p), q, L) <= 1e-4 * LaplaceHp(p).lq_power(q)
        assert tail_mass(LaplaceHp(p), q, L / 2) > 1e-4 * LaplaceHp(p).lq_power(q)


def test_truncation_flag_is_conservative_for_large_q():
    # q = p'/2 is large near p = 1, so the worst-case bound rho^(1/q) stays
    # above 1% although doubling L leaves the norm unchanged
    run = laplace_run(1.05)
    assert run.truncation_warning
    wider = solve_laplace_norm(1.05, 512, 2 * run.L, auto_enlarge=False)
    assert abs(wider.norm - run.norm) < 1e-6
    assert not laplace_run(1.5).truncation_warning


def test_small_window_sets_the_warning_flag():
    run = solve_laplace_norm(1.5, 256, 2.0, auto_enlarge=False)
    assert run.truncation_warning
    assert run.L == 2.0


def test_domain():
    with pytest.raises(DomainError):
        solve_laplace_norm(2.0)
    with pytest.raises(DomainError):
        sweep_minimum(0.9, 1.5)


@pytest.mark.parametrize("p", [1.1, 1.3, 1.5, 1.7, 1.9])
def test_bound_chain_against_numerical_value(p):
    n = laplace_run(p).norm
    assert n <= bound_setterqvist(p) + 2e-3
    assert bound_setterqvist(p) <= bound_hardy(p) + 2e-3
    assert n <= bound_fourier(p) + 2e-3
    assert bound_fourier(p) <= bound_riesz_thorin(p) + 2e-3


def test_endpoints():
    assert laplace_run(1.999).norm == pytest.approx(math.sqrt(math.pi), abs=5e-3)
    assert laplace_run(1.02).norm <= 1 + 5e-3


def test_golden_section_on_a_parabola():
    x, fx, evals = golden_section_minimize(lambda t: (t - 0.3) ** 2 + 1, 0.0, 1.0, 1e-8)
    assert x == pytest.approx(0.3, abs=1e-7)
    assert fx == pytest.approx(1.0)
    assert evals < 60


def test_unimodality_detection():
    assert is_unimodal([3, 2, 1, 2, 3])
    assert is_unimodal([1, 2, 3])
    assert is_unimodal([3, 2, 1])
    assert not is_unimodal([1, 3, 2, 4])
    assert not is_unimodal([3, 1, 3, 1, 3])


def test_sweep_falls_back_on_non_unimodal_data(monkeypatch):
    values = {1.2: 1.0, 1.4: 0.5, 1.6: 0.9, 1.8: 0.4}

    class Fake:
        def __init__(self, p):
            self.norm = values[round(p, 12)]

    monkeypatch.setattr(laplace, "solve_laplace_norm", lambda p, *a, **k: Fake(p))
    res = sweep_minimum(1.2, 1.8, 0.2)
    assert not res.unimodal
    assert (res.p_star, res.n_star) == (1.8, 0.4)


def test_sweep_minimum_and_local_minimality():
    res = sweep_minimum()
    assert res.unimodal
    assert res.p_star == pytest.approx(MIN_P, abs=2e-3)
    assert res.n_star == pytest.approx(MIN_N, abs=5e-4)
    for dp in (-0.01, 0.01):
        assert solve_laplace_norm(res.p_star + dp).norm > res.n_star
    fine = sweep_minimum(1.10, 1.16, 0.02, N=1024)
    assert abs(fine.n_star - res.n_star) < 1e-4


def test_crosscheck_by_direct_quadrature():
    run = laplace_run(1.5)
    ratio = crosscheck_direct_quadrature(run)
    assert ratio == pytest.approx(1.07652, abs=1e-2)
    assert ratio == pytest.approx(run.norm, abs=1e-2)
    assert abs(crosscheck_direct_quadrature(run, 4096) - ratio) < 1e-3


def test_any_test_function_gives_a_lower_bound():
    p = 1.5
    ratio = direct_laplace_ratio(lambda y: np.exp(-y ** 2 / 2), p, 32.0).ratio
    assert 0 < ratio <= laplace_run(p).norm + 1e-2


def test_crosscheck_refuses_unresolved_tails():
    with pytest.raises(CrossCheckError) as err:
        direct_laplace_ratio(lambda y: np.ones_like(y), 1.5, 8.0)
    assert "f_tail" in err.value.diagnostics


def test_table_records_failures_in_row():
    rows = reproduce_table1(N=256, ps=(1.5, 2.5))
    assert rows[0].error is None and rows[0].n_numeric is not None
    assert rows[1].n_numeric is None and "DomainError" in rows[1].error


def test_table_is_order_independent():
    a = reproduce_table1(N=256, ps=(1.3, 1.6))
    b = reproduce_table1(N=256, ps=(1.3, 1.6), jobs=2)
    assert [r.n_numeric for r in a] == [r.n_numeric for r in b]


def test_plot_data_columns():
    rows = plot_data([(1.5, 1.0765)])
    assert set(rows[0]) == {"p", "n_numeric", "c_rt", "c_f", "c_h", "c_s"}
    assert rows[0]["c_s"] == pytest.approx(bound_setterqvist(1.5))
