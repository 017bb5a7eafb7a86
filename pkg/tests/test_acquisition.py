import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import norm

from lipbo.acquisition import (
    AcquisitionSpec,
    TruncationLimits,
    accept_reject,
    beta_practical,
    beta_schedule,
    beta_theorem,
    ei,
    pi,
    tei,
    tpi,
    truncation_limits,
    tucb,
    ucb,
    z_score,
)
from lipbo.lipschitz import EnvelopeValues


def _quad(g, a, b, mu, sigma):
    # the density is negligible beyond 40 sigma, so clip there and break the
    # interval around the peak; quad alone can step over a narrow spike
    a, b = max(a, mu - 40 * sigma), min(b, mu + 40 * sigma)
    if a >= b:
        return 0.0
    pts = [p for p in mu + sigma * np.arange(-8.0, 9.0) if a < p < b]
    val, _ = integrate.quad(g, a, b, points=pts or None, epsabs=1e-13, epsrel=1e-12, limit=400)
    return val


def quad_tei(mu, sigma, y_star, lo, hi):
    a = max(lo, y_star)
    return _quad(lambda f: (f - y_star) * norm.pdf(f, mu, sigma), a, hi, mu, sigma)


def quad_tpi(mu, sigma, lo, hi):
    return _quad(lambda f: norm.pdf(f, mu, sigma), lo, hi, mu, sigma)


# --- base acquisitions ---------------------------------------------------------


def test_z_score():
    assert z_score(1.0, 2.0, 0.0) == 0.5
    assert z_score(0.3, 1.0, 0.3) == 0.0
    assert z_score(1.0, 1.0, 2.0) < 0 < z_score(1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        z_score(0.0, 0.0, 1.0)


def test_ucb():
    assert ucb(0.7, 0.0, 3.0) == 0.7
    assert ucb(0.7, 1.3, 0.0) == 0.7
    assert ucb(0.0, 1.0, 4.0) == 2.0
    with pytest.raises(ValueError):
        ucb(0.0, 1.0, -1.0)


def test_ei_at_incumbent_matches_quadrature():
    want, _ = integrate.quad(lambda f: f * norm.pdf(f), 0, np.inf)
    assert ei(0.0, 1.0, 0.0) == pytest.approx(want, abs=1e-10)
    assert ei(0.0, 1.0, 0.0) == pytest.approx(0.39894, abs=1e-5)


def test_ei_zero_sigma_limits():
    assert ei(0.2, 0.0, 1.0) == 0.0
    assert ei(1.5, 0.0, 1.0) == 0.5


@settings(max_examples=200, deadline=None)
@given(st.floats(-10, 10), st.floats(0, 10), st.floats(-10, 10))
def test_ei_lower_bounds(mu, sigma, y_star):
    v = ei(mu, sigma, y_star)
    assert v >= 0 and v >= mu - y_star - 1e-12


def test_pi_values():
    assert pi(0.4, 1.0, 0.4) == 0.5
    assert pi(2.0, 1.0, 0.0) == pytest.approx(norm.cdf(2.0), abs=1e-12)
    assert pi(2.0, 1.0, 0.0) == pytest.approx(0.97725, abs=1e-5)
    assert pi(1.0, 0.0, 1.0) == 1.0 and pi(0.9, 0.0, 1.0) == 0.0


def test_pi_monotone_in_mu():
    mu = np.linspace(-5, 5, 101)
    assert np.all(np.diff(pi(mu, 0.7, 0.3)) >= 0)


# --- truncation --------------------------------------------------------------


@pytest.mark.parametrize("y_star, want", [(0.0, (0.0, 1.0)), (2.0, (1.0, 1.0)), (-2.0, (-1.0, 1.0))])
def test_truncation_limits_cases(y_star, want):
    lim = truncation_limits(EnvelopeValues(-1.0, 1.0), y_star)
    assert (lim.lo, lim.hi) == want


def test_truncation_limits_rejects_bad_envelope():
    with pytest.raises(ValueError):
        truncation_limits(EnvelopeValues(1.0, -1.0), 0.0)


def test_tei_full_range_is_ei():
    assert tei(0.3, 0.8, 0.1, -np.inf, np.inf) == pytest.approx(ei(0.3, 0.8, 0.1), abs=1e-12)


def test_tei_empty_range_is_zero():
    assert tei(0.3, 0.8, 0.1, 0.5, 0.5) == 0.0


def test_tei_quadrature_hand_case():
    want, _ = integrate.quad(lambda f: f * norm.pdf(f), 0, 2, epsabs=1e-14)
    assert tei(0.0, 1.0, 0.0, 0.0, 2.0) == pytest.approx(want, abs=1e-8)


def test_tei_zero_sigma_limit():
    assert tei(0.5, 0.0, 0.2, 0.2, 1.0) == pytest.approx(0.3)
    assert tei(1.5, 0.0, 0.2, 0.2, 1.0) == 0.0


def test_tpi_values():
    assert tpi(0.3, 0.9, 0.1, np.inf) == pytest.approx(pi(0.3, 0.9, 0.1), abs=1e-15)
    assert tpi(0.3, 0.9, 0.4, 0.4) == 0.0
    assert tpi(0.0, 1.0, -1.0, 1.0) == pytest.approx(norm.cdf(1) - norm.cdf(-1), abs=1e-12)
    assert tpi(0.0, 1.0, -1.0, 1.0) == pytest.approx(0.68269, abs=1e-5)
    assert tpi(0.5, 0.0, 0.0, 1.0) == 1.0 and tpi(1.5, 0.0, 0.0, 1.0) == 0.0


def test_truncated_scores_reject_bad_limits():
    with pytest.raises(ValueError):
        tpi(0.0, 1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        tei(0.0, 1.0, 0.0, 1.0, 0.0)


def test_tucb_and_accept_reject():
    assert tucb(3.0, 2.0) == 2.0
    assert tucb(1.0, 2.0) == 1.0
    assert tucb(1.0, np.inf) == 1.0
    assert accept_reject(0.5, -1.0, 1.0) == 0.5
    assert accept_reject(1.5, -1.0, 1.0) == -np.inf
    assert accept_reject(1.0, -1.0, 1.0) == 1.0
    assert accept_reject(-1.0, -1.0, 1.0) == -1.0


def test_method_pairing_validity():
    assert AcquisitionSpec("ei", "truncated").label == "TEI"
    assert AcquisitionSpec("ts", "ar").label == "AR-TS"
    with pytest.raises(ValueError):
        AcquisitionSpec("ts", "truncated")
    with pytest.raises(ValueError):
        AcquisitionSpec("ei", "ar")


def test_limits_dataclass_roundtrip():
    lim = TruncationLimits(0.0, 1.0)
    assert lim.lo <= lim.hi


# --- beta --------------------------------------------------------------------


def test_beta_values():
    assert beta_practical(1, 2) == pytest.approx(0.4 * math.log(2))
    assert beta_practical(1, 2) == pytest.approx(0.2773, abs=1e-4)
    want = (2 * math.log(100 * (math.pi**2 / 6) / 0.1)) ** 2
    assert beta_theorem(1, 100, 0.1) == pytest.approx(want, rel=1e-14)
    assert beta_theorem(1, 100, 0.1, literal=False) == pytest.approx(math.sqrt(want), rel=1e-14)
    assert beta_schedule(5, 3, "constant", beta=1e16) == 1e16


@pytest.mark.parametrize("kw", [dict(kind="practical"), dict(kind="theorem", n_points=50),
                                dict(kind="theorem", n_points=50, literal=False)])
def test_beta_nondecreasing(kw):
    vals = [beta_schedule(t, 3, **kw) for t in range(1, 200)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


# --- properties --------------------------------------------------------------


def test_reductions_on_random_draws():
    rng = np.random.default_rng(0)
    mu = rng.uniform(-5, 5, 10_000)
    sigma = rng.uniform(1e-3, 5, 10_000)
    y = rng.uniform(-5, 5, 10_000)
    assert np.max(np.abs(tei(mu, sigma, y, -np.inf, np.inf) - ei(mu, sigma, y))) <= 1e-10
    assert np.max(np.abs(tpi(mu, sigma, y, np.inf) - pi(mu, sigma, y))) <= 1e-10


@settings(max_examples=150, deadline=None)
@given(st.floats(-5, 5), st.floats(1e-3, 10), st.floats(-5, 5), st.floats(-6, 6), st.floats(0, 6))
def test_truncated_scores_match_quadrature(mu, sigma, y_star, lo, width):
    hi = lo + width
    assert abs(tpi(mu, sigma, lo, hi) - quad_tpi(mu, sigma, lo, hi)) <= 1e-6
    assert abs(tei(mu, sigma, y_star, lo, hi) - quad_tei(mu, sigma, y_star, lo, hi)) <= 1e-6


@settings(max_examples=150, deadline=None)
@given(st.floats(-5, 5), st.floats(0, 5), st.floats(-3, 3), st.floats(0, 3), st.floats(0, 3))
def test_rejected_points_score_nothing(mu, sigma, upper, width, gap):
    lower = upper - width
    y_star = upper + gap
    lim = truncation_limits(EnvelopeValues(lower, upper), y_star)
    lo, hi = lim.lo, lim.hi
    assert tpi(mu, sigma, lo, hi) == 0.0
    assert tei(mu, sigma, y_star, lo, hi) == 0.0
    assert tucb(ucb(mu, sigma, 2.0), upper) <= y_star
    assert accept_reject(upper + 1e-6 + gap, lower, upper) == -np.inf


@settings(max_examples=150, deadline=None)
@given(st.floats(-5, 5), st.floats(0, 5), st.floats(-3, 3), st.floats(0, 3), st.floats(-4, 4))
def test_ranges(mu, sigma, lower, width, y_star):
    upper = lower + width
    lim = truncation_limits(EnvelopeValues(lower, upper), y_star)
    assert lim.lo == min(max(y_star, lower), upper) and lim.hi == upper
    assert 0.0 <= tpi(mu, sigma, lim.lo, lim.hi) <= 1.0
    if lim.lo >= y_star:
        assert tei(mu, sigma, y_star, lim.lo, lim.hi) >= 0.0


@settings(max_examples=150, deadline=None)
@given(st.floats(-5, 5), st.floats(1e-3, 5), st.floats(-3, 3), st.floats(0, 3), st.floats(0, 2), st.floats(0, 2))
def test_widening_never_decreases_tpi(mu, sigma, lo, width, dl, dh):
    hi = lo + width
    assert tpi(mu, sigma, lo - dl, hi + dh) >= tpi(mu, sigma, lo, hi) - 1e-15
