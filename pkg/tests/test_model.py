import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from aimdsched.model import (
    ConfigError,
    NegativeCyclePolicy,
    NodeParams,
    NonPositiveCycle,
    SystemConfig,
    SystemState,
    admission_rate_at,
    admission_update,
    admitted_volume,
    average_admission_rate,
    cycle_period,
    fixed_point,
    validate_config,
)

from conftest import configs

U1 = [17.0, 36.5, 56.0, 75.5]


def test_validate_table1(table1):
    vc = validate_config(table1)
    assert vc.alpha_bar == pytest.approx((0.1, 0.2, 0.3, 0.4), abs=1e-15)
    assert vc.lam == 100.0


def test_validate_single_node():
    vc = validate_config(SystemConfig(1.0, (NodeParams(1.0, 0.5),)))
    assert vc.alpha_bar == (1.0,)


def test_validate_rejects_beta_one():
    cfg = SystemConfig(1.0, (NodeParams(1.0, 0.5), NodeParams(1.0, 1.0)))
    with pytest.raises(ConfigError, match=r"node 2: backoff must lie in open interval \(0,1\)"):
        validate_config(cfg)


def test_validate_reports_every_problem():
    cfg = SystemConfig(-1.0, (NodeParams(0.0, 0.0, -1.0, -2.0),))
    with pytest.raises(ConfigError) as err:
        validate_config(cfg)
    assert len(err.value.problems) == 5


def test_validate_infeasible_start_under_error_policy():
    cfg = SystemConfig(1.0, (NodeParams(1.0, 0.5, u0=4.0),), NegativeCyclePolicy.ERROR)
    with pytest.raises(ConfigError, match="infeasible initial state"):
        validate_config(cfg)
    # the same state is allowed when repeated backoff may rescue it
    validate_config(SystemConfig(1.0, (NodeParams(1.0, 0.5, u0=4.0),)))


def test_cycle_period_table1(table1):
    assert cycle_period(SystemState.initial(table1), table1) == pytest.approx(3.4, rel=1e-12)
    assert cycle_period(U1, table1) == pytest.approx(0.3, rel=1e-12)


def test_cycle_period_zero_signals(table1):
    with pytest.raises(NonPositiveCycle):
        cycle_period([50.0, 50.0, 50.0, 50.0], table1)


def test_admission_update_table1(table1):
    p1, p4 = table1.nodes[0], table1.nodes[3]
    assert admission_update(0.0, 3.4, p1) == pytest.approx(17.0)
    assert admission_update(15.0, 3.4, p4) == pytest.approx(75.5)


def test_admission_rate_at(table1):
    p1, p2 = table1.nodes[0], table1.nodes[1]
    assert admission_rate_at(0.0, 5.0, p2) == 2.5
    assert admission_rate_at(1.7, 0.0, p1, T=3.4) == pytest.approx(8.5)
    assert admission_rate_at(3.4, 5.0, p2, T=3.4) == pytest.approx(admission_update(5.0, 3.4, p2))
    with pytest.raises(ValueError):
        admission_rate_at(3.5, 5.0, p2, T=3.4)
    with pytest.raises(ValueError):
        admission_rate_at(-0.1, 5.0, p2)


def test_average_admission_rate(table1):
    assert average_admission_rate(0.0, 3.4, table1.nodes[0]) == pytest.approx(8.5)
    eq = fixed_point(table1)
    avs = [average_admission_rate(u, eq.t_star, p) for u, p in zip(eq.u_star, table1.nodes)]
    assert avs == pytest.approx([10.0, 20.0, 30.0, 40.0])
    assert math.fsum(avs) == pytest.approx(100.0, rel=1e-12)


def test_fixed_point_table1(table1):
    eq = fixed_point(table1)
    assert eq.t_star == pytest.approx(4.0 / 3.0, rel=1e-14)
    assert eq.u_star == pytest.approx((40 / 3, 80 / 3, 40.0, 160 / 3), rel=1e-14)
    assert eq.w_star == pytest.approx((10 / 9, 20 / 9, 30 / 9, 40 / 9), rel=1e-14)


def test_fixed_point_queue_matches_root_finder(table1):
    from scipy.optimize import brentq

    eq = fixed_point(table1)
    T = eq.t_star
    for p, w_star in zip(table1.nodes, eq.w_star):
        # nonzero root of f(w) - w = (a/2) T^2 - sqrt(2 a w) T on (0, (a/2)T^2]
        root = brentq(lambda w: 0.5 * p.alpha * T * T - math.sqrt(2 * p.alpha * w) * T, 1e-9, p.alpha * T * T)
        assert w_star == pytest.approx(root, rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(configs())
def test_equilibrium_balances_arrivals(cfg):
    eq = fixed_point(cfg)
    total = math.fsum(p.beta * u + 0.5 * p.alpha * eq.t_star for p, u in zip(cfg.nodes, eq.u_star))
    assert total == pytest.approx(cfg.lam, rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(configs())
def test_fixed_point_residual(cfg):
    eq = fixed_point(cfg)
    for p, u in zip(cfg.nodes, eq.u_star):
        assert admission_update(u, eq.t_star, p) == pytest.approx(u, rel=1e-9, abs=1e-12)
    assert cycle_period(eq.u_star, cfg) == pytest.approx(eq.t_star, rel=1e-9)


@settings(max_examples=200, deadline=None)
@given(configs())
def test_clearance_consistency(cfg):
    u = cfg.u0
    try:
        T = cycle_period(u, cfg)
    except NonPositiveCycle:
        return
    admitted = math.fsum(admitted_volume(x, T, p) for x, p in zip(u, cfg.nodes))
    assert admitted == pytest.approx(cfg.lam * T, rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 100.0), st.floats(0.01, 10.0), st.floats(0.01, 0.99), st.floats(0.01, 10.0))
def test_trapezoid_identity_against_quadrature(u_k, alpha, beta, T):
    p = NodeParams(alpha, beta)
    quad, _ = integrate.quad(lambda tau: admission_rate_at(tau, u_k, p, T), 0.0, T, epsabs=0, epsrel=1e-13)
    assert admitted_volume(u_k, T, p) == pytest.approx(quad, rel=1e-9)
    assert average_admission_rate(u_k, T, p) == pytest.approx(quad / T, rel=1e-9)


def test_table1_cycle_periods_stay_positive(table1):
    u = table1.u0
    for _ in range(201):
        T = cycle_period(u, table1)
        assert T > 0
        u = np.array([admission_update(x, T, p) for x, p in zip(u, table1.nodes)])
