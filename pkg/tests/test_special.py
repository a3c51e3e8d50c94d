import math

import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from robust_t.errors import DomainError
from robust_t.special import digamma, log_gamma

# Reference values evaluated with 50-digit arbitrary-precision arithmetic.
DIGAMMA_1 = -0.5772156649015329       # minus the Euler-Mascheroni constant
DIGAMMA_HALF = -1.9635100260214235    # -gamma - 2 log 2
PSI_2_5 = 0.7031566406452432
LOG_GAMMA_10 = 12.801827480081469     # log(9!)

GRID = np.geomspace(0.1, 1e4, 120)


class TestLogGamma:
    def test_at_one(self):
        assert log_gamma(1.0) == pytest.approx(0.0, abs=1e-14)

    def test_at_half(self):
        assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), abs=1e-14)

    def test_at_ten_exact_factorial(self):
        assert log_gamma(10.0) == pytest.approx(math.log(362880.0), abs=1e-12)
        assert log_gamma(10.0) == pytest.approx(LOG_GAMMA_10, abs=1e-12)

    def test_domain(self):
        for bad in (0.0, -1.0, math.nan):
            with pytest.raises(DomainError):
                log_gamma(bad)

    def test_accuracy_moderate_range_absolute(self):
        # |log Gamma| stays below ~150 here, so 1e-12 absolute is meaningful
        for x in np.geomspace(0.05, 50.0, 200):
            assert abs(log_gamma(x) - scipy.special.gammaln(x)) < 1e-12

    def test_accuracy_wide_range_scaled(self):
        # beyond unit scale the float64 spacing of the value itself dominates,
        # so the tolerance is taken relative to max(1, |value|)
        for x in np.geomspace(0.05, 1e6, 250):
            ref = scipy.special.gammaln(x)
            assert abs(log_gamma(x) - ref) < 1e-12 * max(1.0, abs(ref))

    def test_recurrence(self):
        # log Gamma(x+1) = log Gamma(x) + log x; the spacing of the two
        # rounded values bounds what the difference can resolve
        for x in GRID:
            lhs = log_gamma(x + 1.0)
            rhs = log_gamma(x) + math.log(x)
            tol = max(1e-11, 4.0 * np.spacing(abs(lhs)))
            assert abs(lhs - rhs) < tol


class TestDigamma:
    def test_at_one(self):
        assert digamma(1.0) == pytest.approx(DIGAMMA_1, abs=1e-12)

    def test_at_half_closed_form(self):
        closed = -(-DIGAMMA_1) - 2.0 * math.log(2.0)
        assert digamma(0.5) == pytest.approx(closed, abs=1e-12)
        assert digamma(0.5) == pytest.approx(DIGAMMA_HALF, abs=1e-12)

    def test_domain(self):
        for bad in (0.0, -0.5, math.nan):
            with pytest.raises(DomainError):
                digamma(bad)

    def test_accuracy_vs_independent_implementation(self):
        for x in np.geomspace(0.05, 1e6, 250):
            assert abs(digamma(x) - scipy.special.psi(x)) < 1e-10

    def test_functional_equation(self):
        for x in GRID:
            assert abs(digamma(x + 1.0) - digamma(x) - 1.0 / x) < 1e-10

    def test_is_derivative_of_log_gamma(self):
        # central finite difference of log_gamma as the independent oracle
        for x in GRID:
            h = 3e-5 * max(1.0, x)
            fd = (log_gamma(x + h) - log_gamma(x - h)) / (2.0 * h)
            assert abs(fd - digamma(x)) < 1e-6


@given(st.floats(0.1, 1e4))
@settings(max_examples=80, deadline=None)
def test_digamma_recurrence_property(x):
    assert abs(digamma(x + 1.0) - digamma(x) - 1.0 / x) < 1e-10


@given(st.floats(0.1, 1e3))
@settings(max_examples=80, deadline=None)
def test_log_gamma_recurrence_property(x):
    assert abs(log_gamma(x + 1.0) - log_gamma(x) - math.log(x)) < 1e-11
