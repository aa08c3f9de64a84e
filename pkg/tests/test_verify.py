import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from epigeom import bodies as B
from epigeom import densities as dens
from epigeom import exponent, fixtures
from epigeom import verify as V
from epigeom.geometry import SupportBody

U = dens.uniform_interval(-0.5, 0.5)
G = dens.gaussian(0.0, 1.0)
LAPLACE = fixtures.density("laplace")
EXP = dens.exponential(1.0)
PAIRS = {
    "gauss": (G, dens.gaussian(0.0, 3.0)),
    "unif": (U, U),
    "unif-gauss": (U, G),
    "laplace": (LAPLACE, LAPLACE),
    "exp": (EXP, EXP),
    "laplace-unif": (LAPLACE, U),
}
DISK_C1 = 16.0 / (3.0 * math.pi**2)


class TestVerdicts:
    def test_rules(self):
        assert V.verdict_for(0.0, 1e-6, 0.0) == V.HOLDS
        assert V.verdict_for(-1e-7, 1e-6, 1.0) == V.HOLDS
        assert V.verdict_for(-1e-3, 1e-6, 1e-2) == V.INCONCLUSIVE
        assert V.verdict_for(-1e-3, 1e-6, 1e-4) == V.VIOLATED

    def test_nan_is_inconclusive(self):
        rep = V.CheckReport("x", "d", 0.0, 0.0, math.nan, 1e-6)
        assert rep.verdict == V.INCONCLUSIVE

    def test_json(self):
        rep = V.check_epi(G, G, 2.0)
        js = json.loads(json.dumps(rep.to_json()))
        assert js["verdict"] == "holds" and js["name"] == "epi"
        assert set(js) >= {"lhs", "rhs", "margin", "tolerance", "error_estimate", "inputs_digest"}

    def test_digest_depends_on_inputs(self):
        assert V.check_epi(G, G, 2.0).inputs_digest != V.check_epi(G, G, 3.0).inputs_digest
        assert V.check_epi(G, G, 2.0).inputs_digest == V.check_epi(G, G, 2.0).inputs_digest


class TestForwardEPI:
    def test_uniform_example(self):
        rep = V.check_epi(U, U, 2.0, 1.324702)
        # ∫ triangle^2 = 2/3, so N_2(X+Y) = 9/4
        assert_allclose(rep.lhs, 2.25**1.324702, rtol=1e-5)
        assert rep.rhs == pytest.approx(2.0, rel=1e-9)
        assert rep.holds

    def test_gaussian_example(self):
        rep = V.check_epi(G, G, 2.0, 1.324702)
        assert_allclose(rep.lhs / rep.rhs, 2**1.324702 / 2, rtol=1e-13)
        assert rep.holds and rep.tolerance == V.TOL_CLOSED

    @pytest.mark.parametrize("p", (1.5, 2.0, 4.0))
    @pytest.mark.parametrize("pair", PAIRS)
    def test_epi_at_fixture_scale(self, pair, p):
        rep = V.check_epi(*PAIRS[pair], p)
        assert rep.margin >= -1e-6
        assert rep.details["alpha"] == exponent.alpha(p)

    def test_p_bound(self):
        with pytest.raises(ValueError):
            V.check_epi(G, G, 1.0)

    def test_small_exponent_fails(self):
        assert V.check_epi(U, U, 2.0, 0.8).verdict == V.VIOLATED


class TestLinearized:
    def test_endpoint(self):
        rep = V.check_linearized(U, G, 2.0, None, 0.0)
        assert rep.lhs == rep.rhs
        assert_allclose(rep.lhs, 0.5 * math.log(2 * math.pi) + 0.5 * math.log(2.0), rtol=1e-14)

    def test_gaussian_half(self):
        assert V.check_linearized(G, G, 2.0, None, 0.5).holds

    def test_uniform_sweep(self):
        reps = V.linearized_sweep(U, U, 2.0, count=11)
        assert len(reps) == 11 and all(r.holds for r in reps)

    @pytest.mark.parametrize("alpha", (0.8, 1.0, None))
    @pytest.mark.parametrize("pair", ["unif", "gauss", "laplace-unif"])
    def test_equivalence_at_balance(self, pair, alpha):
        # EPI for (X, Y) is the linearized inequality for the rescaled pair at the balancing λ
        fX, fY = PAIRS[pair]
        a = exponent.alpha(2.0) if alpha is None else alpha
        lam = V.balancing_lambda(fX, fY, 2.0, a)
        Xs, Ys = dens.scale(fX, lam ** (-0.5 / a)), dens.scale(fY, (1 - lam) ** (-0.5 / a))
        forward = V.check_epi(fX, fY, 2.0, a)
        linear = V.check_linearized(Xs, Ys, 2.0, a, lam)
        assert forward.holds == linear.holds
        assert (forward.margin > 0) == (linear.margin > 0)

    @pytest.mark.parametrize("alpha", (0.8, None))
    @pytest.mark.parametrize("pair", ["unif", "laplace-unif"])
    def test_sweep_implied_by_scaled_epi(self, pair, alpha):
        fX, fY = PAIRS[pair]
        a = exponent.alpha(2.0) if alpha is None else alpha
        for lam in np.linspace(0.05, 0.95, 7):
            scaled = V.check_epi(dens.scale(fX, lam ** (0.5 / a)), dens.scale(fY, (1 - lam) ** (0.5 / a)), 2.0, a)
            if scaled.margin > 0:
                assert V.check_linearized(fX, fY, 2.0, a, lam).margin > 0

    @pytest.mark.parametrize("pair", ["unif", "gauss", "laplace-unif"])
    def test_exponent_sweep(self, pair):
        assert all(r.holds for r in V.linearized_sweep(*PAIRS[pair], 2.0))

    def test_lambda_range(self):
        with pytest.raises(ValueError):
            V.check_linearized(G, G, 2.0, None, 1.5)


class TestBalance:
    def test_equal_inputs(self):
        assert V.balancing_lambda(U, U, 2.0) == 0.5

    def test_formula(self):
        # N_2 scales with variance in 1-D, so α = 1 and variance ratio 3 give 3/4
        assert_allclose(V.balancing_lambda(dens.gaussian(0, 3.0), G, 2.0, 1.0), 0.75, rtol=1e-14)

    def test_residual(self):
        rep = V.check_balance(G, dens.gaussian(0.0, 4.0), 2.0)
        assert abs(rep.lhs) <= 1e-6 and rep.holds
        assert 0 < rep.details["lam"] < 1

    def test_infinite_power_rejected(self):
        with pytest.raises(ValueError):
            V.balancing_lambda(G, U, 0.0)


class TestReverseEPI:
    def test_square_p0(self):
        rep = V.check_reverse_epi(fixtures.density("square"), 0.0)
        assert rep.lhs == 2.0 and rep.rhs == 2.0 and rep.margin == 0.0 and rep.holds

    def test_square_p2(self):
        rep = V.check_reverse_epi(fixtures.density("square"), 2.0)
        assert_allclose(rep.lhs, 1.5, rtol=1e-6)
        assert rep.rhs == pytest.approx(2.0, rel=1e-12)
        assert rep.holds

    def test_diamond_p2(self):
        assert V.check_reverse_epi(fixtures.density("diamond"), 2.0).holds

    @pytest.mark.parametrize("p", (0.0, 2.0))
    @pytest.mark.parametrize("name", fixtures.LOG_CONCAVE_JOINTS)
    def test_proved_cases(self, name, p):
        rep = V.check_reverse_epi(fixtures.density(name), p)
        assert rep.asserting and rep.holds

    def test_other_orders_are_data(self):
        rep = V.check_reverse_epi(fixtures.density("square"), 5.0)
        assert not rep.asserting

    def test_asymmetric_rejected(self):
        spec = dens.uniform(SupportBody.box([0.5, 0.5]), [0.2, 0.0])
        with pytest.raises(ValueError):
            V.check_reverse_epi(spec, 2.0)

    def test_grid_joint_pushforward(self):
        g = dens.discretize(fixtures.density("square"), 1.0, 256)
        rep = V.check_reverse_epi(g, 2.0)
        assert_allclose(rep.lhs, 1.5, rtol=1e-2)
        assert rep.holds


class TestEntropyConvexity:
    def test_square(self):
        rep = V.check_entropy_convexity(fixtures.density("square"), 2.0)
        assert not rep.asserting
        assert len(rep.details["entropies"]) == 21
        assert rep.details["convexity_violations"] == [] and rep.details["bound_violations"] == []

    def test_endpoints(self):
        rep = V.check_entropy_convexity(fixtures.density("disk"), 2.0, 5)
        h = rep.details["entropies"]
        assert h[0] == h[-1] == rep.rhs

    def test_unequal_marginals_rejected(self):
        with pytest.raises(ValueError):
            V.check_entropy_convexity(fixtures.density("gaussian2-corr"), 2.0)


class TestDCT:
    def test_equal_intervals(self):
        rep = V.dct_lower_check(dens.uniform_interval(0, 1), dens.uniform_interval(0, 1), 0.5)
        assert rep.lhs == 0.0 and rep.rhs == 0.0 and rep.holds

    def test_unequal_intervals(self):
        rep = V.dct_lower_check(dens.uniform_interval(0, 1), dens.uniform_interval(0, 2), 0.5)
        assert_allclose(rep.lhs, math.log(1.5), rtol=1e-15)
        assert_allclose(rep.rhs, 0.5 * math.log(2.0), rtol=1e-15)
        assert rep.margin > 0

    @pytest.mark.parametrize("lam", (0.0, 1.0))
    def test_endpoints(self, lam):
        rep = V.dct_lower_check(fixtures.density("square"), fixtures.density("disk"), lam)
        assert rep.margin == pytest.approx(0.0, abs=1e-15)

    def test_planar_steiner(self):
        # |K/2 + D/2| = 1/4 + per/4 + π/4 for the unit square K and unit disk D
        rep = V.dct_lower_check(fixtures.density("square"), fixtures.density("disk"), 0.5)
        assert_allclose(rep.lhs, math.log(0.25 + 1.0 + math.pi / 4), rtol=1e-14)

    def test_unbounded_rejected(self):
        with pytest.raises(ValueError):
            V.dct_lower_check(G, U, 0.5)


class TestIdentities:
    def test_c1_disk(self):
        rep = V.check_identity_c1(fixtures.density("disk"), 32)
        assert rep.lhs <= 1e-3
        assert_allclose(rep.details["C1"], DISK_C1, rtol=1e-3)

    @pytest.mark.parametrize("name", ["gaussian2", "gaussian2-corr", "square", "ep-product"])
    def test_c1_fixtures(self, name):
        assert V.check_identity_c1(fixtures.density(name), 32).holds

    @pytest.mark.parametrize("name, p", [("uniform01", 1.0), ("disk", 2.0), ("gaussian1", 1.0), ("square", 1.0), ("ep-product", 2.0)])
    def test_rp(self, name, p):
        rep = V.check_identity_rp(fixtures.density(name), p, 32)
        assert rep.holds

    def test_rp_unit_interval(self):
        rep = V.check_identity_rp(dens.uniform_interval(0, 1), 1.0)
        assert_allclose(rep.details["R_p"], 0.5, rtol=1e-9)
        assert_allclose(rep.details["B_p_fhat"], 0.5, atol=1e-6)

    def test_rp_gaussian_tight(self):
        assert V.check_identity_rp(G, 1.0).lhs <= 1e-4

    @pytest.mark.parametrize("name", ["square", "disk", "hexagon", "diamond"])
    def test_cminus1(self, name):
        assert V.check_cminus1(fixtures.density(name), 32).lhs <= 1e-12

    def test_cminus1_values(self):
        s = 2**-0.5
        rep = V.check_cminus1(fixtures.density("square"), [[1, 0], [-1, 0], [s, s], [-s, -s]])
        for key in ("inv_range", "polar_2K", "polar_R_inf"):
            assert_allclose(rep.details[key], [1, 1, s, s], rtol=1e-15)
        disk = V.check_cminus1(fixtures.density("disk"), 8)
        assert_allclose(disk.details["inv_range"], 0.5, rtol=1e-15)

    def test_cminus1_needs_symmetric_support(self):
        with pytest.raises(ValueError):
            V.check_cminus1(dens.uniform(SupportBody.box([0.5, 0.5]), [0.1, 0.0]))


class TestConvexity:
    @pytest.mark.parametrize("r", (0.1, 1.0, 7.0))
    def test_disk(self, r):
        assert V.convexity_certificate(B.star_from_support(SupportBody.ball(r), 360)).holds

    def test_nonconvex_star(self):
        rep = V.convexity_certificate(fixtures.body("nonconvex"))
        assert rep.verdict == V.VIOLATED
        assert len(rep.details["worst_triple"]) == 3

    def test_c1_disk(self):
        assert V.convexity_certificate(B.cross_section_body(fixtures.density("disk"), 1.0, 360)).holds

    @pytest.mark.parametrize("name", fixtures.LOG_CONCAVE_JOINTS + ("hexagon", "gaussian2-corr"))
    def test_log_concave_bodies(self, name):
        f = fixtures.density(name)
        for K in (
            B.cross_section_body(f, 1.0, 180, verify=False),
            B.intersection_body_of_density(dens.self_convolve(f), 180),
            B.ball_mean_body(f, 2.0, 180),
        ):
            assert V.convexity_certificate(K).holds, K.label

    def test_asymmetric_rejected(self):
        d = B.direction_set(2, 8)
        K = B.StarBody(2, d, np.linspace(1, 2, 8), "lopsided")
        with pytest.raises(ValueError):
            V.convexity_certificate(K)
