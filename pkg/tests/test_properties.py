"""Structural invariants checked over generated inputs."""

import math

from hypothesis import given, settings
from hypothesis import strategies as st

from jsm2lab import ProblemParams
from jsm2lab.bounds import (
    fano_lower_value,
    log_binom,
    p_chernoff,
    sufficient_M,
    t_value,
    upper_bound_perr,
)
from jsm2lab.montecarlo import trend_residual, wilson_interval
from jsm2lab.quadstats import QuadFormSpec, z_J_moments


@st.composite
def params_strategy(draw):
    n = draw(st.integers(4, 128))
    k = draw(st.integers(1, max(1, min(n - 1, 8))))
    m = draw(st.integers(k + 1, n))
    s = draw(st.integers(1, 12))
    sigma2 = draw(st.floats(1e-3, 1e3))
    xmin2 = draw(st.floats(1e-3, 1e3))
    rho = draw(st.floats(1.01, 16.0))
    return ProblemParams(n=n, k=k, m=m, s=s, sigma2=sigma2, xmin2=xmin2, rho=rho)


@given(trials=st.integers(1, 10_000), frac=st.floats(0.0, 1.0))
def test_wilson_interval_orders_and_clamps(trials, frac):
    successes = min(trials, int(round(frac * trials)))
    low, high = wilson_interval(successes, trials)
    assert 0.0 <= low <= successes / trials <= high <= 1.0
    assert high - low > 0.0


@given(x=st.floats(1e-6, 1e6), beta=st.floats(1e-6, 1e4))
def test_chernoff_kernel_nonpositive(x, beta):
    val = p_chernoff(x, beta)
    assert val <= 0.0
    if abs(x - 1.0) > 1e-6:
        assert val < 0.0


@settings(max_examples=60)
@given(params=params_strategy())
def test_default_slack_always_admissible(params):
    ceiling = (1.0 - params.k / params.m) * params.xmin2
    assert 0.0 < params.delta < ceiling


@settings(max_examples=60)
@given(params=params_strategy())
def test_tilt_stays_in_unit_interval(params):
    t = t_value(params)
    assert 0.0 < t < 1.0
    assert t < 1.0 - 1.0 / params.rho


@settings(max_examples=40)
@given(params=params_strategy())
def test_upper_bound_report_is_coherent(params):
    rep = upper_bound_perr(params)
    assert rep.log_p_d1 < 0.0
    assert rep.log_p_d2 < 0.0
    assert 0.0 <= rep.upper_perr <= 1.0
    assert 0.0 <= rep.lower_perr <= 1.0
    assert rep.log_upper_perr >= rep.log_p_d1 + math.log(2.0) - 1e-12


@settings(max_examples=40)
@given(params=params_strategy())
def test_sufficiency_exceeds_sparsity_and_fano_dies_beyond_it(params):
    m_suff = sufficient_M(params)
    assert m_suff > params.k
    # any M at or past the requirement drives the converse floor to zero
    big_m = int(math.ceil(m_suff)) + 1
    assert fano_lower_value(params.n, params.k, big_m, params.s, params.snr_min) >= 0.0


@given(n=st.integers(0, 400), k=st.integers(0, 400))
def test_log_binom_symmetry(n, k):
    if k > n:
        n, k = k, n
    assert math.isclose(log_binom(n, k), log_binom(n, n - k), rel_tol=1e-12)
    assert log_binom(n, k) >= 0.0


@given(
    alphas=st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=8),
    m=st.integers(2, 12),
)
def test_spec_moments_match_closed_form(alphas, m):
    k = m - 1
    spec = QuadFormSpec.from_alpha(alphas, m, k)
    mean, var = z_J_moments(alphas, m, k)
    assert math.isclose(spec.mean, mean, rel_tol=1e-12)
    assert math.isclose(spec.variance, var, rel_tol=1e-12)


@given(st.lists(st.floats(0.0, 1.0), max_size=12))
def test_trend_residual_zero_iff_sorted_down(values):
    ordered = sorted(values, reverse=True)
    assert trend_residual(ordered) <= 1e-12
