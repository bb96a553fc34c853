import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from vanhove import bounds
from vanhove.bounds import (
    InequalityId,
    check_four_propagator,
    check_log_bounds,
    check_one_minus_a,
    check_power_bound,
    check_product_bound,
    check_theta_lipschitz,
    coarse_grid,
    fit_constants,
    four_propagator_integral,
    pair_integral,
    panel_rule,
    power_integral,
    product_integral,
    resolvent_power_integral,
    verify_all,
)


@pytest.fixture(scope="module")
def constants():
    return fit_constants()


def _quad(f, lo, hi, pts):
    pts = [p for p in pts if lo < p < hi]
    return quad(f, lo, hi, points=pts or None, limit=500, epsabs=1e-12, epsrel=1e-11)[0]


def test_panel_rule_integrates_polynomials():
    w, wt = panel_rule(-1.0, 2.0, 0.1, [(0.3, 0.3)])
    assert np.sum(wt) == pytest.approx(3.0, rel=1e-14)
    assert np.sum(wt * w**5) == pytest.approx((2.0**6 - 1.0) / 6, rel=1e-12)


def test_panel_rule_empty():
    w, wt = panel_rule(1.0, 1.0, 0.1)
    assert w.size == 0 == wt.size


@pytest.mark.parametrize("k,alpha,eta", [(2, 0.5, 0.1), (3, -0.4, 0.05), (4, 1.7, 0.3)])
def test_power_integral_against_antiderivative(k, alpha, eta):
    # int (-1/(w-z))^k dw = (-1)^k (w-z)^(1-k)/(1-k)
    z = alpha + 1j * eta
    exact = (-1) ** k * ((1 - z) ** (1 - k) - (-z) ** (1 - k)) / (1 - k)
    assert abs(power_integral(k, alpha, eta) - exact) < 1e-10 * max(1.0, abs(exact))


def test_power_examples():
    assert check_power_bound(2, 0.5, 0.1) <= 1 + bounds.QUAD_SLACK
    assert check_power_bound(2, 10.0, 1.0) <= 1 + bounds.QUAD_SLACK


def test_power_preconditions():
    with pytest.raises(ValueError):
        check_power_bound(1, 0.5, 0.1)
    with pytest.raises(ValueError):
        check_power_bound(2, 0.5, 0.0)


@settings(max_examples=60, deadline=None)
@given(k=st.integers(2, 5), alpha=st.floats(-2, 3), eta=st.floats(1e-3, 1.0))
def test_power_bound_property(k, alpha, eta):
    assert check_power_bound(k, alpha, eta) <= 1 + bounds.QUAD_SLACK


@pytest.mark.parametrize("k,p,alpha,beta,eta", [(1, 1, 0.5, 0.5, 0.05), (2, 1, 0.2, 0.7, 0.1), (1, 3, -0.5, 1.4, 0.2)])
def test_product_integral_against_quad(k, p, alpha, beta, eta):
    f = lambda w: abs(w - alpha - 1j * eta) ** -k * abs(w - beta + 1j * eta) ** -p
    assert product_integral(k, p, alpha, beta, eta) == pytest.approx(_quad(f, 0, 1, [alpha, beta]), rel=1e-9)


def test_product_coincident_poles_exceed_unit_constant():
    # k = p = 1, alpha = beta = 0.5: LHS ~ pi / eta, above the unit-constant form 1 / eta
    lhs = product_integral(1, 1, 0.5, 0.5, 0.01)
    assert lhs == pytest.approx(2 * math.atan(50) / 0.01, rel=1e-9)
    assert lhs > 100
    assert check_product_bound(1, 1, 0.5, 0.5, 0.01) <= 1


def test_product_example_k2_p1():
    assert product_integral(2, 1, 0.2, 0.7, 0.1) <= 100
    # coincident poles need the pi: about 196 against pi / eta^2
    assert 100 < product_integral(2, 1, 0.5, 0.5, 0.1) <= math.pi * 100


@settings(max_examples=40, deadline=None)
@given(k=st.integers(1, 3), p=st.integers(1, 3), a=st.floats(-2, 3), b=st.floats(-2, 3), eta=st.floats(1e-3, 0.5))
def test_product_bound_property(k, p, a, b, eta):
    assert check_product_bound(k, p, a, b, eta) <= 1 + bounds.QUAD_SLACK


def test_one_minus_a_against_quad():
    f = lambda w: abs(w - 0.4 - 0.05j) ** -1.5
    assert resolvent_power_integral(1.5, 0.4, 0.05) == pytest.approx(_quad(f, -3, 3, [0.4]), rel=1e-9)
    with pytest.raises(ValueError):
        check_one_minus_a(1.0, 0.4, 0.05)


def test_pair_integral_against_quad():
    f = lambda a: 1 / (abs(0.0 - a - 0.02j) * abs(1.0 - a - 0.02j))
    assert pair_integral(0.0, 1.0, 0.02) == pytest.approx(_quad(f, -3, 3, [0.0, 1.0]), rel=1e-9)


def test_log_bound_examples(constants):
    c_log, c_delta = constants[InequalityId.AB_LOG], constants[InequalityId.AB_DELTA]
    r_log, r_delta = check_log_bounds(0.0, 1.0, 0.01, c_log, c_delta)
    assert r_log <= 1 and r_delta <= 1
    # coincident poles: gap is exactly eta
    for eta in (0.1, 0.01, 0.001):
        assert check_log_bounds(0.5, 0.5, eta, c_log, c_delta)[0] <= 1


def test_log_bound_preconditions():
    with pytest.raises(ValueError):
        check_log_bounds(0.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        check_log_bounds(4.0, 1.0, 0.1)


def test_fitted_constant_covers_finer_grid(constants):
    c_log = constants[InequalityId.AB_LOG]
    xs = np.linspace(-2, 3, 23)
    worst = max(check_log_bounds(x, y, e)[0] for x in xs for y in xs[::3] for e in (2e-3, 0.05))
    assert worst <= c_log


def test_four_propagator_refinement():
    base = four_propagator_integral(0.5, 1, 0.05)
    fine = four_propagator_integral(0.5, 1, 0.05, scale=0.5)
    assert math.isfinite(base)
    assert abs(fine - base) <= 1e-3 * base


def test_four_propagator_eta_scaling():
    lhs = {e: four_propagator_integral(0.5, 2, e) for e in (0.1, 0.05, 0.025)}
    for a, b in ((0.1, 0.05), (0.05, 0.025)):
        growth = lhs[b] / lhs[a]
        log_ratio = (math.log(b) / math.log(a)) ** 2
        # eta^-2 times the |log eta|^2 correction
        assert growth / log_ratio == pytest.approx(4, rel=0.25)
        assert check_four_propagator(0.5, 2, b) / check_four_propagator(0.5, 2, a) < 2


def test_four_propagator_preconditions():
    with pytest.raises(ValueError):
        check_four_propagator(0.5, 0, 0.05)
    with pytest.raises(ValueError):
        check_four_propagator(0.5, 1, 0.3)


def test_theta_lipschitz_examples():
    assert check_theta_lipschitz(0.3, 0.5, 0.01) <= 1
    for eta in (1e-1, 1e-3, 1e-6):
        assert check_theta_lipschitz(0.4, 0.4, eta) <= 1


@settings(max_examples=100, deadline=None)
@given(a=st.floats(-2, 3), w=st.floats(0.05, 0.95), eta=st.floats(1e-4, 1.0))
def test_theta_lipschitz_property(a, w, eta):
    assert check_theta_lipschitz(a, w, eta) <= 1 + 1e-12


def test_coarse_grid_is_deterministic():
    g1, g2 = coarse_grid(), coarse_grid()
    assert g1 == g2
    assert set(g1) == {InequalityId.ONE_MINUS_A, InequalityId.AB_LOG, InequalityId.AB_DELTA, InequalityId.FOUR_K}


def test_verify_all_small(constants):
    reports = verify_all(50, seed=3, constants=constants)
    assert [r.inequality_id for r in reports] == list(InequalityId)
    assert all(r.samples == 50 for r in reports)
    assert all(r.passed for r in reports)
    product = reports[1]
    assert product.constant == math.pi and product.literal_violations is not None


def test_verify_all_rejects_zero():
    with pytest.raises(ValueError):
        verify_all(0)
