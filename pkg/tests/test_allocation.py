import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aimdsched.allocation import (
    InvariantSet,
    NotYet,
    admitted_cumulative,
    closed_loop_queue,
    contains,
    descent_holds,
    entry_step,
    invariant_set,
    iter_queue,
    queue_at,
    queue_update,
    served_cumulative,
    service_rate,
)
from aimdsched.engine import run_deterministic
from aimdsched.model import NodeParams, fixed_point, table1_config

N1 = NodeParams(5.0, 0.5, 0.0, 7.5)

pos_alpha = st.floats(0.01, 50.0)
pos_T = st.floats(1e-3, 10.0)


def test_service_rate_table1_node1():
    dec = service_rate(0.0, 7.5, N1)
    assert dec.gamma == pytest.approx(math.sqrt(75), rel=1e-15)
    assert dec.t_z == pytest.approx(math.sqrt(3), rel=1e-15)


def test_service_rate_empty_queue():
    dec = service_rate(12.0, 0.0, N1)
    assert dec.gamma == 6.0 and dec.t_z == 0.0


def test_service_rate_equilibrium_matches_inflow(table1):
    eq = fixed_point(table1)
    dec = service_rate(eq.u_star[0], eq.w_star[0], N1)
    assert dec.gamma == pytest.approx(10.0, rel=1e-12)


def test_service_rate_rejects_negative_queue():
    with pytest.raises(ValueError):
        service_rate(1.0, -1.0, N1)


def test_queue_update_table1_node1():
    dec = service_rate(0.0, 7.5, N1)
    w1 = queue_update(7.5, 0.0, dec.gamma, 3.4, N1)
    assert w1 == pytest.approx(7.5 + 2.5 * 3.4**2 - math.sqrt(75) * 3.4, rel=1e-14)
    assert w1 == pytest.approx(6.955, abs=5e-4)


def test_queue_update_at_minimizer_is_zero():
    T = 1.7
    w = 0.5 * N1.alpha * T * T
    dec = service_rate(3.0, w, N1)
    assert queue_update(w, 3.0, dec.gamma, T, N1) == 0.0


def test_queue_fixed_point_constant_period():
    T = 4 / 3
    w = N1.alpha * T * T / 8
    dec = service_rate(2.0, w, N1)
    assert queue_update(w, 2.0, dec.gamma, T, N1) == pytest.approx(w, rel=1e-13)


def test_invariant_set_uppers_at_equilibrium(table1):
    uppers = [invariant_set(4 / 3, p).upper for p in table1.nodes]
    # reference values are truncated to two decimals
    for got, ref in zip(uppers, (4.44, 8.88, 13.33, 17.77)):
        assert 0 <= got - ref < 0.01


def test_invariant_set_degenerate_and_start(table1):
    assert invariant_set(0.0, N1) == InvariantSet(0.0, 0.0)
    assert invariant_set(3.4, N1).upper == pytest.approx(28.9, rel=1e-14)


def test_contains_examples():
    s = invariant_set(4 / 3, N1)
    assert contains(s, 0.0)
    assert contains(s, 4.44) and not contains(s, 4.46)
    assert contains(s, s.upper + 1e-13)
    assert 4.44 in s


def test_entry_step_examples(table1):
    assert entry_step([(7.5, 3.4)], N1).step == 0
    eq = fixed_point(table1)
    assert entry_step([(eq.w_star[0], eq.t_star)] * 5, N1).step == 0
    with pytest.raises(NotYet):
        entry_step([(100.0, 0.1)] * 3, N1).require()


def test_entry_step_far_start_is_finite_and_within_bound():
    nodes = list(table1_config().nodes)
    nodes[0] = NodeParams(5.0, 0.5, 0.0, 1000.0)
    cfg = table1_config().__class__(100.0, tuple(nodes))
    recs = run_deterministic(cfg, 200)
    res = entry_step([(r.nodes[0].w, r.T) for r in recs], nodes[0])
    k = res.require()
    assert k > 0
    assert k <= res.bound_squared


def test_cumulative_curves_and_tangency():
    dec = service_rate(0.0, 7.5, N1)
    assert admitted_cumulative(0.0, 7.5, 0.0, dec.gamma, N1) == 7.5
    assert served_cumulative(0.0, dec.gamma) == 0.0
    y = admitted_cumulative(dec.t_z, 7.5, 0.0, dec.gamma, N1)
    z = served_cumulative(dec.t_z, dec.gamma)
    assert y == pytest.approx(z, abs=1e-12)
    assert z == pytest.approx(15.0, rel=1e-14)
    w1 = queue_update(7.5, 0.0, dec.gamma, 3.4, N1)
    assert queue_at(3.4, 7.5, 0.0, dec.gamma, N1) == pytest.approx(w1, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1e4), st.floats(0, 100), pos_alpha, st.floats(0.01, 0.99), pos_T)
def test_tangent_line_stays_below(w, u, alpha, beta, T):
    p = NodeParams(alpha, beta)
    dec = service_rate(u, w, p)
    taus = np.linspace(0.0, max(T, dec.t_z), 2001)
    gap = np.array([queue_at(t, w, u, dec.gamma, p) for t in taus])
    scale = max(1.0, w, dec.gamma * taus[-1])
    assert gap.min() >= -1e-9 * scale
    assert abs(queue_at(dec.t_z, w, u, dec.gamma, p)) <= 1e-6 * scale


def _random_draws(seed, n=10_000):
    rng = np.random.default_rng(seed)
    return rng.uniform(1e-3, 10.0, n), rng.uniform(0.01, 50.0, n), rng.uniform(0.0, 1.0, n)


@settings(max_examples=500, deadline=None)
@given(st.floats(0, 1e6), pos_T, pos_alpha)
def test_nonnegativity(w, T, alpha):
    assert closed_loop_queue(w, T, alpha) >= -1e-12


def test_nonnegativity_bulk():
    T, alpha, frac = _random_draws(1)
    w = frac**4 * 1e6
    assert min(closed_loop_queue(*args) for args in zip(w, T, alpha)) >= -1e-12


@settings(max_examples=500, deadline=None)
@given(st.floats(0, 1), pos_T, pos_alpha)
def test_invariance_with_fixed_period(frac, T, alpha):
    upper = 0.5 * alpha * T * T
    w_next = closed_loop_queue(frac * upper, T, alpha)
    assert -1e-12 <= w_next <= upper * (1 + 1e-12) + 1e-12


def test_invariance_bulk():
    T, alpha, frac = _random_draws(2)
    upper = 0.5 * alpha * T * T
    w_next = np.array([closed_loop_queue(*args) for args in zip(frac * upper, T, alpha)])
    assert np.all(w_next >= -1e-12)
    assert np.all(w_next <= upper * (1 + 1e-12) + 1e-12)


@settings(max_examples=2000, deadline=None)
@given(st.floats(1.0001, 1e4), pos_T, pos_alpha)
def test_descent_squared_form_outside_set(scale, T, alpha):
    w = scale * 0.5 * alpha * T * T
    assert descent_holds(w, closed_loop_queue(w, T, alpha), T, alpha, squared=True)


def test_linear_descent_can_fail_for_short_cycles():
    # g(w) >= (alpha/2) T^2, which is below (alpha/2) T once T < 1
    alpha, T = 5.0, 0.3
    w = 1.01 * 0.5 * alpha * T * T
    w_next = closed_loop_queue(w, T, alpha)
    assert descent_holds(w, w_next, T, alpha, squared=True)
    assert not descent_holds(w, w_next, T, alpha)


def test_iter_queue_constant_period_converges_to_set():
    ws = iter_queue(1000.0, [1.0] * 200, 5.0)
    assert ws[-1] <= 2.5 + 1e-12
    assert all(b <= a for a, b in zip(ws, ws[1:]) if a > 2.5)
