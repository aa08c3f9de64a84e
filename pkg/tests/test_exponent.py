import math

import mpmath as mp
import numpy as np
import pytest
from numpy.testing import assert_allclose

from epigeom import exponent as ex

SAMPLE_P = (1.1, 1.5, 2.0, 3.0, 5.0, 10.0, 100.0)


def mp_alpha(p, dps=50):
    """High-precision closed form, evaluated without any series switch."""
    with mp.workdps(dps):
        p = mp.mpf(p)
        bracket = (p + 1) / (p - 1) * mp.log((p + 1) / (2 * p)) + mp.log(p) / (p - 1)
        return float(1 / (1 + bracket / mp.log(2)))


def grid_alpha(p, count=20001):
    """Independent oracle: sup over a dense λ grid of ``H / (p' log(c_p / (c_q c_r)))``."""
    lam = np.linspace(0.0, 1.0, count)[1:-1]
    pc = p / (p - 1.0)
    qc, rc = pc / lam, pc / (1.0 - lam)
    q, r = qc / (qc - 1.0), rc / (rc - 1.0)
    log_c = lambda s, sc: np.log(s) / s - np.log(sc) / sc
    denom = pc * (log_c(p, pc) - log_c(q, qc) - log_c(r, rc))
    H = -lam * np.log(lam) - (1 - lam) * np.log(1 - lam)
    k = int(np.argmax(H / denom))
    return (H / denom)[k], lam[k]


class TestScalars:
    def test_holder_conjugate(self):
        assert ex.holder_conjugate(2.0) == 2.0
        assert ex.holder_conjugate(1.0) == math.inf
        assert ex.holder_conjugate(math.inf) == 1.0
        assert_allclose(ex.holder_conjugate(3.0), 1.5)
        with pytest.raises(ValueError):
            ex.holder_conjugate(0.5)

    def test_young_constant(self):
        assert ex.young_constant(1.0) == 1.0
        assert ex.young_constant(math.inf) == 1.0
        # c_2 = 2^{1/2} 2^{-1/2}
        assert_allclose(ex.young_constant(2.0), 1.0)
        assert_allclose(ex.young_constant(3.0), 3 ** (1 / 3) * 1.5 ** (-2 / 3))

    def test_bernoulli_entropy(self):
        assert ex.bernoulli_entropy(0.0) == 0.0
        assert ex.bernoulli_entropy(1.0) == 0.0
        assert_allclose(ex.bernoulli_entropy(0.5), math.log(2.0))
        with pytest.raises(ValueError):
            ex.bernoulli_entropy(1.5)

    def test_young_exponents_relation(self):
        p, lam = 2.5, 0.3
        q, r = ex.young_exponents(lam, p)
        pc = ex.holder_conjugate(p)
        # 1/q + 1/r = 1 + 1/p and λ = p'/q'
        assert_allclose(1 / q + 1 / r, 1 + 1 / p, rtol=1e-14)
        assert_allclose(pc / ex.holder_conjugate(q), lam, rtol=1e-14)

    def test_p_below_one_rejected(self):
        with pytest.raises(ValueError):
            ex.alpha(0.9)
        with pytest.raises(ValueError):
            ex.a_function(0.5, 1.0)


class TestAFunction:
    @pytest.mark.parametrize("p", SAMPLE_P)
    def test_two_forms_agree(self, p):
        for lam in np.linspace(0.01, 0.99, 15):
            assert_allclose(ex.a_function(lam, p), ex.a_function_qr(lam, p), rtol=1e-11, atol=1e-14)

    @pytest.mark.parametrize("p", (1.3, 2.0, 6.0))
    def test_young_constant_identity(self, p):
        for lam in (0.2, 0.5, 0.9):
            q, r = ex.young_exponents(lam, p)
            pc = ex.holder_conjugate(p)
            lhs = pc * math.log(ex.young_constant(p) / (ex.young_constant(q) * ex.young_constant(r)))
            assert_allclose(lhs, ex.bernoulli_entropy(lam) - ex.a_function(lam, p), rtol=1e-12)

    def test_endpoints_vanish(self):
        assert ex.a_function(0.0, 2.0) == pytest.approx(0.0, abs=1e-15)
        assert ex.a_function(1.0, 2.0) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("p", (1.5, 2.0, 7.0))
    def test_derivatives_against_finite_differences(self, p):
        lam, h = 0.37, 1e-5
        da, dh, d2a, d2h = ex.proof_derivatives(lam, p)
        A = lambda x: ex.a_function(x, p)
        H = ex.bernoulli_entropy
        assert_allclose(da, (A(lam + h) - A(lam - h)) / (2 * h), rtol=1e-7)
        assert_allclose(dh, (H(lam + h) - H(lam - h)) / (2 * h), rtol=1e-7)
        h2 = 1e-4
        assert_allclose(d2a, (A(lam + h2) - 2 * A(lam) + A(lam - h2)) / h2**2, rtol=1e-5)
        assert_allclose(d2h, (H(lam + h2) - 2 * H(lam) + H(lam - h2)) / h2**2, rtol=1e-5)

    @pytest.mark.parametrize("p", SAMPLE_P)
    def test_second_derivative_ratio(self, p):
        for lam in (0.1, 0.5, 0.8):
            _, _, d2a, d2h = ex.proof_derivatives(lam, p)
            assert_allclose(ex.second_derivative_ratio(lam, p), d2a / d2h, rtol=1e-12)


class TestAlpha:
    @pytest.mark.parametrize("p", SAMPLE_P + (1.0001, 1.01, 1e3, 1e4))
    def test_closed_form_matches_high_precision(self, p):
        assert_allclose(ex.alpha(p), mp_alpha(p), rtol=2e-15)

    @pytest.mark.parametrize("e", (1e-5, 3e-5, 9.99e-5, 1.0001e-4, 2e-4))
    def test_series_branch_near_one(self, e):
        assert_allclose(ex.alpha(1.0 + e), mp_alpha(1.0 + e), rtol=1e-14)

    def test_limit_at_one(self):
        assert_allclose(ex.alpha(1.0 + 1e-9), 1.0, atol=1e-6)

    @pytest.mark.parametrize("p", SAMPLE_P)
    def test_matches_lambda_grid_oracle(self, p):
        a_grid, lam_grid = grid_alpha(p)
        assert_allclose(ex.alpha(p), a_grid, rtol=1e-8)
        assert abs(lam_grid - 0.5) < 1e-4

    @pytest.mark.parametrize("p", SAMPLE_P)
    def test_ratio_sup_at_half(self, p):
        sup, arg = ex.ratio_sup(p)
        assert_allclose(sup, ex.ratio(0.5, p), rtol=1e-12)
        assert abs(arg - 0.5) < 1e-6
        assert abs(ex.alpha(p) - ex.alpha_opt(p)) <= 1e-8

    def test_value_at_two(self):
        # log2 of the closed form: 1/α(2) = 1 + (3 log(3/4) + log 2)/log 2
        expected = 1.0 / (1.0 + (3 * math.log(0.75) + math.log(2)) / math.log(2))
        assert_allclose(ex.alpha(2.0), expected, rtol=1e-15)
        assert_allclose(ex.alpha(2.0), 1.3247006966389714, rtol=1e-14)

    def test_exploratory_flag(self):
        with pytest.raises(ValueError):
            ex.alpha(0.5)
        val = ex.alpha(0.5, exploratory=True)
        assert_allclose(val, mp_alpha(0.5), rtol=1e-14)
        with pytest.raises(ValueError):
            ex.alpha(1.0, exploratory=True)

    def test_ratio_sup_grid_guard(self):
        with pytest.raises(ValueError):
            ex.ratio_sup(2.0, grid=10)


class TestBounds:
    @pytest.mark.parametrize("p", np.geomspace(1.01, 1e4, 40))
    def test_ordering(self, p):
        assert ex.alpha_lower_bound(p) <= ex.alpha(p) < ex.bm16_exponent(p)

    def test_asymptotics(self):
        p = 1e4
        assert abs(ex.alpha(p) * math.log2(p) / (p - 1) - 1) <= 0.1

    def test_lower_bound_value_at_two(self):
        assert_allclose(ex.alpha_lower_bound(2.0), 1.0 / (2.0 * math.log2(1.5)), rtol=1e-15)

    def test_comparison_report(self):
        rep = ex.comparison_bounds(3.0)
        assert rep.ordered
        row = rep.as_row()
        assert list(row) == ["p", "alpha", "alpha_opt", "bm16", "lower_bound", "argmax_lambda"]
        assert row["bm16"] == 2.0

    def test_context(self):
        ctx = ex.exponent_context(2.0, 0.5)
        assert ctx.q == ctx.r
        assert_allclose(ctx.H, math.log(2))
        assert_allclose(ctx.A, ex.a_function(0.5, 2.0))
        assert ctx.alpha == ex.alpha(2.0)
