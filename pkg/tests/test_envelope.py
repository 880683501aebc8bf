"""Envelope ODE tests: first integrals, closed forms, reparametrization."""
import math

import pytest

from nlslab import (EnvelopeState, TauEnvelope, chevron_state,
                    first_integral_residual, integrate_r, integrate_tau,
                    tau_difference_bound, tau_from_r, time_change_s,
                    time_change_s_limit)
from nlslab.errors import EnvelopeError, IntegrationError


def test_initial_data():
    st = integrate_tau(0.1, 1, [0.0])[0]
    assert (st.tau, st.tau_dot) == (1.0, 0.0)
    rt = integrate_r(2.0, [0.0])[0]
    assert (rt.r, rt.r_dot) == (1.0, 0.0)


def test_r2_is_chevron():
    # [PAPER] r_2(t) = <t> = sqrt(1 + t^2)
    for st in integrate_r(2.0, [0.5, 1.0, 2.0, 10.0]):
        assert abs(st.r - math.sqrt(1.0 + st.t**2)) <= 1e-10
    assert integrate_r(2.0, [1.0])[0].r == pytest.approx(math.sqrt(2.0), abs=1e-10)


def test_first_integral_preserved():
    for st in integrate_tau(0.1, 1, [1.0, 5.0, 10.0]):
        assert abs(first_integral_residual(st)) <= 1e-11
    for st in integrate_r(0.7, [1.0, 10.0]):
        assert abs(first_integral_residual(st)) <= 1e-11


def test_r_alpha_linear_growth():
    # [PAPER] r_alpha(t) ~ t for every alpha > 0
    for alpha in (0.5, 1.0, 2.0):
        st = integrate_r(alpha, [1000.0])[0]
        assert abs(st.r / st.t - 1.0) <= 0.1


def test_r2_correction_term():
    # [PAPER] w_alpha(t) = t^{1-alpha} / (2 (alpha - 1)) for alpha = 2 at t = 100
    st = integrate_r(2.0, [100.0])[0]
    predicted = 100.0 ** (-1.0) / 2.0
    assert abs((st.r - st.t) - predicted) <= 0.1 * predicted


def test_tau_from_r_consistency():
    # [DERIVED] cross-integrator agreement of tau_sigma(t) = r_a(t/sqrt(a))
    for sigma in (0.05, 0.1, 0.5):
        alpha = sigma  # d = 1
        ts = [0.5, 1.0, 2.0, 5.0]
        r_states = integrate_r(alpha, [t / math.sqrt(alpha) for t in ts])
        tau_states = integrate_tau(sigma, 1, ts)
        for rs, taus in zip(r_states, tau_states):
            mapped = tau_from_r(rs, sigma, dim=1)
            assert abs(mapped.t - taus.t) <= 1e-9
            assert abs(mapped.tau - taus.tau) <= 1e-9
            assert abs(mapped.tau_dot - taus.tau_dot) <= 1e-9


def test_tau_from_r_validation():
    rs = integrate_r(0.2, [1.0])[0]
    with pytest.raises(EnvelopeError):
        tau_from_r(rs, 0.5, dim=1)   # alpha mismatch
    with pytest.raises(EnvelopeError):
        tau_from_r(rs, 0.0, dim=1)


def test_chevron_state_closed_form():
    st = chevron_state(3.0, 1.0, 1)
    assert st.tau == pytest.approx(math.sqrt(10.0), abs=1e-14)
    assert st.tau_dot == pytest.approx(3.0 / math.sqrt(10.0), abs=1e-14)


# ------------------------------------------------------------- time change

def test_time_change_limit_formula():
    # [PAPER] s_sigma(infinity) = ln(1/(d sigma)) / (4 (1 - d sigma))
    assert time_change_s_limit(0.1, 1) == pytest.approx(
        math.log(10.0) / (4.0 * 0.9), abs=1e-14)


def test_time_change_approaches_limit():
    # the limit is reached only as tau^{-a} -> 0, which is logarithmically
    # slow; assert monotone approach from below instead of a tight window
    states = integrate_tau(0.1, 1, [1e1, 1e3, 1e5])
    limit = time_change_s_limit(0.1, 1)
    gaps = [limit - time_change_s(st) for st in states]
    assert all(g > 0 for g in gaps)
    assert all(b < a for a, b in zip(gaps, gaps[1:]))


def test_time_change_chain_rule():
    # [DERIVED] Richardson-extrapolated central difference of s(t) against
    # the analytic ds/dt = tau' a tau^{-a-1} / (4 (1-a) (1 - tau^{-a}))
    sigma, t = 0.1, 2.0
    a = sigma

    def s_of(tq):
        return time_change_s(integrate_tau(sigma, 1, [tq])[0])

    st = integrate_tau(sigma, 1, [t])[0]
    exact = (st.tau_dot * a * st.tau ** (-a - 1.0)
             / (4.0 * (1.0 - a) * (1.0 - st.tau ** (-a))))
    h = 1e-2
    d_h = (s_of(t + h) - s_of(t - h)) / (2.0 * h)
    d_h2 = (s_of(t + h / 2.0) - s_of(t - h / 2.0)) / h
    richardson = (4.0 * d_h2 - d_h) / 3.0
    assert abs(richardson - exact) <= 1e-8


def test_time_change_domain_errors():
    with pytest.raises(EnvelopeError):
        time_change_s(EnvelopeState(t=0.0, tau=1.0, tau_dot=0.0, sigma=0.1, dim=1))
    with pytest.raises(EnvelopeError):
        time_change_s(EnvelopeState(t=1.0, tau=2.0, tau_dot=0.5, sigma=0.0, dim=1))


# ------------------------------------------------------------- diff bound

def test_difference_bound_transition_scale():
    # [PAPER] at sigma ~ 1/ln t the two envelopes and the bound are the
    # same order of magnitude
    t = 1000.0
    sigma = 1.0 / math.log(t)
    tau_s = integrate_tau(sigma, 1, [t])[0].tau
    tau_0 = integrate_tau(0.0, 1, [t])[0].tau
    assert 0.1 <= tau_s / tau_0 <= 10.0
    bound = sigma * t * math.log(t + 2.0) ** 1.5
    assert 0.1 <= abs(tau_s - tau_0) / bound <= 10.0 or abs(tau_s - tau_0) <= bound


def test_difference_vanishes_with_sigma():
    # [DERIVED] sup_t |tau_sigma - tau_0| monotone in sigma over a dyadic sweep
    grid = [1.0, 5.0, 20.0, 100.0]
    tau0 = [st.tau for st in integrate_tau(0.0, 1, grid)]
    sups = []
    for sigma in (0.4, 0.2, 0.1, 0.05):
        taus = [st.tau for st in integrate_tau(sigma, 1, grid)]
        sups.append(max(abs(a - b) for a, b in zip(taus, tau0)))
    assert all(b < a for a, b in zip(sups, sups[1:]))


def test_difference_bound_window_validation():
    with pytest.raises(EnvelopeError):
        tau_difference_bound(1.5, 1, 100.0)
    with pytest.raises(EnvelopeError):
        tau_difference_bound(0.0, 1, 100.0)


# ------------------------------------------------------------- integrator

def test_envelope_monotone_query_enforced():
    env = TauEnvelope(0.1, 1)
    env.state(2.0)
    with pytest.raises(IntegrationError):
        env.state(1.0)


def test_integrate_grids_validated():
    with pytest.raises(EnvelopeError):
        integrate_tau(0.1, 1, [2.0, 1.0])
    with pytest.raises(EnvelopeError):
        integrate_tau(0.1, 1, [-1.0])
    with pytest.raises(EnvelopeError):
        integrate_r(0.0, [1.0])
    with pytest.raises(EnvelopeError):
        TauEnvelope(-0.1, 1)
