import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from epigeom import densities as dens
from epigeom import fixtures, renyi

P_GRID = (0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 10.0, math.inf)


def gaussian_h(p, var=1.0):
    """Rényi entropy of N(0, var) from the moment formula ``∫φ^p = (2π var)^{(1-p)/2} p^{-1/2}``."""
    if p == 1.0:
        return 0.5 * math.log(2 * math.pi * math.e * var)
    if p == math.inf:
        return 0.5 * math.log(2 * math.pi * var)
    return 0.5 * math.log(2 * math.pi * var) + 0.5 * math.log(p) / (p - 1.0)


class TestExamples:
    @pytest.mark.parametrize("p", P_GRID)
    def test_unit_interval(self, p):
        assert renyi.renyi_entropy(dens.uniform_interval(0, 1), p).h_p == pytest.approx(0.0, abs=1e-15)
        assert renyi.entropy_power(dens.uniform_interval(0, 1), p) == pytest.approx(1.0, abs=1e-15)

    def test_gaussian_h2(self):
        assert_allclose(renyi.renyi_entropy(dens.gaussian(0, 1), 2.0).h_p, math.log(2 * math.sqrt(math.pi)), rtol=1e-15)
        assert_allclose(renyi.entropy_power(dens.gaussian(0, 1), 2.0), 4 * math.pi, rtol=1e-14)

    def test_gaussian_shannon(self):
        assert_allclose(renyi.renyi_entropy(dens.gaussian(0, 1), 1.0).h_p, 0.5 * math.log(2 * math.pi * math.e), rtol=1e-15)

    def test_triangle_min_entropy(self):
        x = np.linspace(-1.5, 1.5, 3001)
        tri = dens.GridDensity([x[0]], [x[1] - x[0]], np.clip(1 - np.abs(x), 0, None))
        assert renyi.renyi_entropy(tri, math.inf).h_p == pytest.approx(0.0, abs=1e-12)

    def test_self_convolved_triangle_within_error(self):
        res = renyi.renyi_entropy(dens.self_convolve(dens.uniform_interval(0, 1)), math.inf)
        assert abs(res.h_p) <= 2 * res.error_estimate + 1e-9

    def test_uniform_support_entropy_power(self):
        assert_allclose(renyi.entropy_power(dens.uniform_interval(-1, 1), 0.0), 4.0, rtol=1e-15)

    def test_unbounded_support_gives_infinity(self):
        res = renyi.renyi_entropy(dens.gaussian(0, 1), 0.0)
        assert res.h_p == math.inf and res.N_p == math.inf

    def test_negative_order_rejected(self):
        with pytest.raises(ValueError):
            renyi.renyi_entropy(dens.gaussian(0, 1), -0.5)

    def test_shannon_band(self):
        near = renyi.renyi_entropy(dens.gaussian(0, 1), 1.0 + 5e-7).h_p
        assert_allclose(near, gaussian_h(1.0), rtol=1e-12)


class TestDirectional:
    def test_scaling_example(self):
        val = renyi.directional_entropy_power(fixtures.density("gaussian2"), [3.0, 4.0], 1.0)
        assert_allclose(val, 25 * 2 * math.pi * math.e, rtol=1e-13)

    @pytest.mark.parametrize("name", ["disk", "square", "gaussian2-corr"])
    def test_homogeneity(self, name):
        spec = fixtures.density(name)
        v = np.array([0.3, -0.7])
        a = renyi.directional_entropy_power(spec, v, 2.0)
        b = renyi.directional_entropy_power(spec, 2 * v, 2.0)
        assert math.sqrt(b) / math.sqrt(a) == pytest.approx(2.0, rel=1e-15)

    def test_square_axis_support(self):
        assert_allclose(renyi.directional_entropy_power(fixtures.density("square"), [1.0, 0.0], 0.0), 1.0, rtol=1e-15)

    def test_zero_vector(self):
        with pytest.raises(ValueError):
            renyi.directional_entropy_power(fixtures.density("square"), [0.0, 0.0], 2.0)


class TestProperties:
    @pytest.mark.parametrize(
        "name", ["gaussian1", "uniform01", "laplace", "exponential", "disk", "gaussian2-corr", "ep-product"]
    )
    def test_monotone_in_p(self, name):
        spec = fixtures.density(name)
        res = [renyi.renyi_entropy(spec, p) for p in P_GRID]
        for a, b in zip(res, res[1:]):
            assert b.h_p <= a.h_p + 2 * (a.error_estimate + b.error_estimate) + 1e-12

    @pytest.mark.parametrize("a", (0.5, 2.0, 5.0))
    @pytest.mark.parametrize("name", ["gaussian1", "laplace", "exponential", "disk", "gaussian2-corr"])
    def test_scaling_law(self, name, a):
        spec = fixtures.density(name)
        for p in (0.5, 1.0, 2.0, math.inf):
            h0 = renyi.renyi_entropy(spec, p).h_p
            h1 = renyi.renyi_entropy(dens.scale(spec, a), p).h_p
            assert_allclose(h1 - h0, spec.dim * math.log(a), atol=1e-6)

    @pytest.mark.parametrize("p", (0.5, 1.0, 2.0, 3.0, math.inf))
    @pytest.mark.parametrize("name", ["gaussian1", "uniform01", "exponential", "laplace"])
    def test_quadrature_matches_closed_form_1d(self, name, p):
        spec = fixtures.density(name)
        closed = renyi.renyi_entropy(spec, p, renyi.CLOSED_FORM).h_p
        quad = renyi.renyi_entropy(spec, p, renyi.QUADRATURE).h_p
        assert_allclose(quad, closed, atol=1e-6)

    @pytest.mark.parametrize("p", (0.5, 1.0, 2.0, math.inf))
    @pytest.mark.parametrize("name", ["gaussian2-corr", "disk", "square"])
    def test_quadrature_matches_closed_form_2d(self, name, p):
        spec = fixtures.density(name)
        closed = renyi.renyi_entropy(spec, p, renyi.CLOSED_FORM).h_p
        quad = renyi.renyi_entropy(spec, p, renyi.QUADRATURE).h_p
        assert_allclose(quad, closed, atol=1e-4)

    @pytest.mark.parametrize("p", (0.5, 2.0, 3.0))
    def test_gaussian_formula(self, p):
        spec = dens.gaussian(0.0, 2.5)
        assert_allclose(renyi.renyi_entropy(spec, p).h_p, gaussian_h(p, 2.5), rtol=1e-14)

    @pytest.mark.parametrize("p", (0.5, 2.0, 3.0))
    @pytest.mark.parametrize("name", ["gaussian1", "laplace", "disk"])
    def test_monte_carlo_cross_check(self, name, p):
        spec = fixtures.density(name)
        quad = renyi.renyi_entropy(spec, p, renyi.QUADRATURE if spec.dim == 1 else None)
        mc = renyi.renyi_entropy(spec, p, renyi.MONTE_CARLO, seed=12345)
        assert abs(mc.h_p - quad.h_p) <= 3 * mc.error_estimate + quad.error_estimate + 1e-12

    def test_grid_support_threshold(self):
        g = dens.discretize(dens.uniform_interval(-1, 1), resolution=4096)
        assert_allclose(renyi.renyi_entropy(g, 0.0).h_p, math.log(2.0), atol=2e-3)

    def test_result_invariants(self):
        res = renyi.renyi_entropy(fixtures.density("ep-product"), 2.0, renyi.QUADRATURE)
        assert res.error_estimate >= 0 and math.isfinite(res.error_estimate)
        assert_allclose(res.N_p, math.exp(res.h_p), rtol=1e-15)

    def test_product_additivity(self):
        spec = fixtures.density("ep-product")
        parts = sum(renyi.renyi_entropy(f, 2.0).h_p for f in spec.family.factors)
        assert_allclose(renyi.renyi_entropy(spec, 2.0).h_p, parts, rtol=1e-15)
