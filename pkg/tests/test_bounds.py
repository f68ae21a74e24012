import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from greedy_cover.bounds import (
    bounds_report,
    bw_ratio_check,
    corollary_density_bound,
    epsilon_from_mu,
    mu_from_epsilon,
    naszodi_bound,
    optimal_mu,
    theorem1_bounds,
)
from greedy_cover.errors import DomainError
from greedy_cover.spaces import Space, ball_measure
from oracles import cap_s2

# frozen from a 50-digit mpmath evaluation of the closed forms
THM1_UPPER_02_001 = 19.978661367769954967
COROLLARY_4_2 = 18.635532333438687426
COROLLARY_2_2 = 7.5451774444795624753
COROLLARY_10_LN10 = 57.213822999839789489
NASZODI_ORIGINAL = 12.788898309344877531
NASZODI_IMPROVED = 5.6839548041532789027
S2_RATIO_03_15 = 2.2289536961680664159


def test_theorem1_examples():
    assert theorem1_bounds(0.25, 0.2, 0.01)[0] == 4.0
    assert theorem1_bounds(0.3, 0.2, 0.01)[1] == pytest.approx(THM1_UPPER_02_001, rel=1e-14)
    lower, upper = theorem1_bounds(0.5, 0.2, 0.2)
    assert upper == pytest.approx(5.0, rel=1e-15)


def test_theorem1_ordering_errors():
    for args in [(0.2, 0.3, 0.01), (0.3, 0.2, 0.25), (1.2, 0.2, 0.1), (0.3, 0.2, 0.0)]:
        with pytest.raises(ValueError):
            theorem1_bounds(*args)


@given(st.floats(1e-6, 1.0), st.floats(1e-6, 1.0), st.floats(1e-6, 1.0))
def test_lower_below_upper(a, b, c):
    eps, inner, r = sorted((a, b, c))
    lower, upper = theorem1_bounds(r, inner, eps)
    assert lower <= upper * (1 + 1e-12)


def test_corollary_examples():
    assert corollary_density_bound(4, 2.0) == pytest.approx(COROLLARY_4_2, rel=1e-14)
    assert corollary_density_bound(2, 2.0) == pytest.approx(COROLLARY_2_2, rel=1e-14)
    assert corollary_density_bound(10, math.log(10)) == pytest.approx(COROLLARY_10_LN10, rel=1e-14)


def test_corollary_limit_and_domain():
    n = 5
    for mu in (1e3, 1e6, 1e9):
        ratio = corollary_density_bound(n, mu) / (n * math.log(mu * n) + 1)
        assert ratio == pytest.approx(1 + 1 / (mu - 1), rel=1e-12)
    assert corollary_density_bound(n, 1e12) / (n * math.log(1e12 * n) + 1) == pytest.approx(1.0, abs=1e-9)
    for bad in (1.0, 0.5, -2.0):
        with pytest.raises(DomainError):
            corollary_density_bound(3, bad)


@pytest.mark.parametrize("n", [3, 4, 5, 8, 12, 30, 100])
def test_optimal_mu_beats_log_choice(n):
    res = optimal_mu(n)
    assert 1 < res.mu <= n
    assert res.value <= res.value_at_log_n * (1 + 1e-12)
    assert res.value == pytest.approx(corollary_density_bound(n, res.mu), rel=1e-15)


def test_optimal_mu_first_order_condition():
    res = optimal_mu(8)
    assert 1 < res.mu < 8
    h = 1e-5
    deriv = (corollary_density_bound(8, res.mu + h) - corollary_density_bound(8, res.mu - h)) / (2 * h)
    assert abs(deriv) <= 1e-5


@pytest.mark.parametrize("n", [8, 12, 40])
def test_unique_minimum_sign_change(n):
    res = optimal_mu(n)
    h = 1e-3
    f = lambda mu: corollary_density_bound(n, mu)  # noqa: E731
    assert f(res.mu - h) - f(res.mu - 2 * h) < 0
    assert f(res.mu + 2 * h) - f(res.mu + h) > 0


def test_optimal_mu_small_n():
    assert optimal_mu(3).mu > 1
    with pytest.raises(DomainError):
        optimal_mu(2)


def test_bw_ratio_examples():
    rep = bw_ratio_check(Space.torus(3), 0.1, 2.0)
    assert rep.ratio == pytest.approx(8.0, rel=1e-12) and rep.exact and rep.holds
    rep = bw_ratio_check(Space.sphere(2), 0.3, 1.5)
    assert rep.ratio == pytest.approx(S2_RATIO_03_15, rel=1e-11)
    assert rep.ratio == pytest.approx(cap_s2(0.45) / cap_s2(0.3), rel=1e-11)
    assert rep.holds and rep.t_pow_n == 2.25
    rep = bw_ratio_check(Space.sphere(4), 0.5, 1.0)
    assert rep.ratio == 1.0 and rep.holds


def test_bw_ratio_domain():
    with pytest.raises(DomainError):
        bw_ratio_check(Space.sphere(2), 1.0, 2.0)
    with pytest.raises(DomainError):
        bw_ratio_check(Space.torus(2), 0.3, 2.0)
    with pytest.raises(DomainError):
        bw_ratio_check(Space.sphere(2), 0.3, 0.9)


@given(st.integers(1, 10), st.floats(0.01, 1.5), st.floats(1.0, 5.0))
def test_bw_ratio_property(n, r, t):
    assume(t * r < math.pi / 2)
    assert bw_ratio_check(Space.sphere(n), r, t).holds


def test_naszodi_examples():
    R, d = 0.2, 0.1
    res = naszodi_bound(math.pi * R**2, math.pi * (R - d) ** 2, math.pi * (R - d / 2) ** 2, math.pi * (d / 2) ** 2)
    assert res.original == pytest.approx(NASZODI_ORIGINAL, rel=1e-13)
    assert res.improved == pytest.approx(NASZODI_IMPROVED, rel=1e-13)
    assert not res.degenerate
    flat = naszodi_bound(0.3, 0.3, 0.3, 0.3)
    assert flat.original == flat.improved == pytest.approx(1.0)


def test_naszodi_degenerate_point_body():
    R = 0.2
    res = naszodi_bound(math.pi * R**2, 0.0, math.pi * (R / 2) ** 2, math.pi * (R / 2) ** 2)
    assert res.degenerate and math.isinf(res.original)
    assert math.isfinite(res.improved)


def test_naszodi_ordering_errors():
    with pytest.raises(ValueError):
        naszodi_bound(0.1, 0.2, 0.15, 0.01)
    with pytest.raises(ValueError):
        naszodi_bound(0.3, 0.1, 0.2, 0.25)


@given(st.lists(st.floats(1e-6, 1.0), min_size=4, max_size=4))
def test_naszodi_improved_never_worse(vols):
    ball, minus, half, k = sorted(vols)
    ball = min(ball, half)
    res = naszodi_bound(k, minus, half, ball)
    assert res.improved <= res.original * (1 + 1e-12)


@given(st.integers(1, 8), st.floats(0.02, math.pi / 2 - 1e-3), st.floats(1.01, 30.0))
def test_chain_sphere(n, r, mu):
    rep = bounds_report(Space.sphere(n), r, mu=mu)
    assert rep.upper * rep.details["omega_r"] <= corollary_density_bound(n, mu) * (1 + 1e-9)


@given(st.integers(1, 8), st.floats(0.01, 0.499), st.floats(1.01, 30.0))
def test_chain_torus(n, r, mu):
    rep = bounds_report(Space.torus(n), r, mu=mu)
    assert rep.upper * rep.details["omega_r"] <= corollary_density_bound(n, mu) * (1 + 1e-9)


def test_report_fields():
    r = math.pi / 6
    rep = bounds_report(Space.sphere(2), r, epsilon=r / 5)
    assert rep.lower == pytest.approx(1 / cap_s2(r), rel=1e-12)
    assert rep.lower <= rep.upper
    assert rep.mu == pytest.approx(2.0)
    assert rep.t == pytest.approx(1 + 1 / (rep.mu * 2))
    assert rep.t_prime == pytest.approx(rep.mu * 2)
    assert rep.details["omega_r"] == pytest.approx(ball_measure(Space.sphere(2), r))
    assert rep.to_dict()["schema"] == "greedy-cover/1"
    with pytest.raises(ValueError):
        bounds_report(Space.sphere(2), r)
    with pytest.raises(ValueError):
        bounds_report(Space.sphere(2), r, epsilon=0.1, mu=2.0)


@given(st.floats(0.01, 3.0), st.floats(1.01, 50.0), st.integers(1, 20))
def test_mu_epsilon_inverse(r, mu, n):
    eps = epsilon_from_mu(r, mu, n)
    assert mu_from_epsilon(r, eps, n) == pytest.approx(mu, rel=1e-9)
    assert np.isclose(r / (r - eps), 1 + 1 / (mu * n))
