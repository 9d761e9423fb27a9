"""
Unit Tests for Special Functions.

Oracles: an independent power series for I_0 and scipy.special as an
external reference for every branch.
"""

import math

import numpy as np
import pytest
from scipy import special

from modules.mialab.core.exceptions import NumericDomainError, NumericOverflowError
from modules.mialab.numerics.special import bessel_i, log_bessel_i, log_gamma


def _bessel_i0_series(x: float, terms: int = 60) -> float:
    return sum((x / 2.0) ** (2 * k) / math.factorial(k) ** 2 for k in range(terms))


# =============================================================================
# bessel_i / log_bessel_i
# =============================================================================


class TestBesselI:
    """Tests for the modified Bessel function of the first kind."""

    def test_order_zero_at_zero_is_one(self):
        assert bessel_i(0, 0) == 1.0

    def test_positive_order_at_zero_is_zero(self):
        assert bessel_i(1.5, 0) == 0.0

    def test_matches_power_series_oracle(self):
        """I_0(1) agrees with a 60-term series to 1e-12."""
        expected = _bessel_i0_series(1.0)
        assert bessel_i(0, 1.0) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("order", [0.0, 0.5, 1.0, 1.5, 3.0, 7.5, 15.0, 31.0])
    def test_series_branch_relative_accuracy(self, order):
        x = np.array([1e-3, 0.1, 0.5, 1.0, 5.0, 10.0, 25.0, 40.0, 50.0])
        result = bessel_i(order, x)
        np.testing.assert_allclose(result, special.iv(order, x), rtol=1e-10)

    @pytest.mark.parametrize("order", [0.0, 0.5, 1.0, 5.0, 8.0, 15.0, 31.0])
    def test_large_argument_branch_relative_accuracy(self, order):
        x = np.array([50.5, 60.0, 75.0, 100.0, 300.0, 700.0])
        result = bessel_i(order, x)
        np.testing.assert_allclose(result, special.iv(order, x), rtol=1e-8)

    def test_log_form_matches_scaled_reference(self):
        """log I_ν(x) = log ive(ν, x) + x, including x far above the overflow guard."""
        x = np.array([0.3, 12.0, 51.0, 900.0, 5000.0])
        for order in (0.5, 15.0, 63.0):
            expected = np.log(special.ive(order, x)) + x
            np.testing.assert_allclose(log_bessel_i(order, x), expected, rtol=1e-9)

    def test_log_form_at_zero(self):
        assert log_bessel_i(0.0, 0.0) == 0.0
        assert log_bessel_i(2.0, 0.0) == -np.inf

    def test_scalar_in_scalar_out(self):
        assert isinstance(bessel_i(1.0, 2.0), float)
        assert isinstance(log_bessel_i(1.0, 2.0), float)

    def test_negative_order_is_domain_error(self):
        with pytest.raises(NumericDomainError):
            bessel_i(-1.0, 1.0)

    def test_negative_argument_is_domain_error(self):
        with pytest.raises(NumericDomainError):
            bessel_i(0.0, -0.5)

    def test_argument_above_guard_is_overflow_error(self):
        with pytest.raises(NumericOverflowError):
            bessel_i(0.0, 701.0)

    def test_log_form_has_no_overflow_guard(self):
        assert math.isfinite(log_bessel_i(0.5, 1e4))


# =============================================================================
# log_gamma
# =============================================================================


class TestLogGamma:
    """Tests for ln Γ."""

    def test_gamma_one(self):
        assert log_gamma(1.0) == pytest.approx(0.0, abs=1e-10)

    def test_gamma_five_is_log_24(self):
        assert log_gamma(5.0) == pytest.approx(math.log(24.0), abs=1e-10)

    def test_gamma_half_is_half_log_pi(self):
        assert log_gamma(0.5) == pytest.approx(0.5 * math.log(math.pi), abs=1e-10)

    def test_matches_scipy_on_grid(self):
        x = np.array([1e-6, 0.01, 0.3, 0.75, 1.5, 2.0, 3.3, 10.0, 32.0, 150.0, 1e4])
        np.testing.assert_allclose(log_gamma(x), special.gammaln(x), rtol=1e-10, atol=1e-10)

    @pytest.mark.parametrize("x", [0.0, -1.0, -0.5, float("nan")])
    def test_non_positive_is_domain_error(self, x):
        with pytest.raises(NumericDomainError):
            log_gamma(x)
