import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate, stats

from epigeom import densities as dens
from epigeom import fixtures
from epigeom.densities import GridDensity, TailMassError
from epigeom.geometry import SupportBody

SQRT2PI = math.sqrt(2.0 * math.pi)


class TestEvaluate:
    def test_standard_gaussian_at_zero(self):
        assert_allclose(dens.evaluate(dens.gaussian(0.0, 1.0), 0.0), 1.0 / SQRT2PI, rtol=1e-15)

    def test_uniform_outside_support(self):
        assert dens.evaluate(dens.uniform_interval(-0.5, 0.5), 0.7) == 0.0

    def test_exponential(self):
        assert_allclose(dens.evaluate(dens.exponential(1.0), 1.0), math.exp(-1.0), rtol=1e-15)
        assert dens.evaluate(dens.exponential(1.0), -1.0) == 0.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            dens.evaluate(dens.uniform_disk(), [0.0, 0.0, 0.0])

    def test_grid_is_multilinear(self):
        g = GridDensity([0.0], [1.0], np.array([0.0, 1.0, 0.0]))
        assert_allclose(dens.evaluate(g, 0.25), 0.25)
        assert_allclose(dens.evaluate(g, 1.5), 0.5)


class TestNormalisation:
    @pytest.mark.parametrize(
        "spec",
        [
            dens.gaussian(0.3, 2.0),
            dens.exponential(2.5),
            dens.exponential(1.0, sign=-1),
            dens.exponential_power(1.0),
            dens.exponential_power(1.5, 0.7),
            dens.uniform_interval(-1.0, 2.0),
            dens.generalized_gaussian(0.5, 1),
            dens.generalized_gaussian(-0.5, 1),
        ],
        ids=lambda s: s.kind,
    )
    def test_one_dimensional_mass(self, spec):
        R = dens.choose_truncation_radius(spec)
        c = float(spec.center()[0])
        pts = [c]
        fam = spec.family
        if hasattr(fam, "support_radius") and math.isfinite(fam.support_radius):
            pts = [-fam.support_radius, 0.0, fam.support_radius]
        if isinstance(fam, dens.UniformBody):
            pts = list(fam.interval())
        mass, _ = integrate.quad(lambda x: dens.evaluate(spec, x), c - R, c + R, points=pts, limit=400, epsabs=1e-13)
        assert_allclose(mass, 1.0, atol=1e-9)

    @pytest.mark.parametrize("beta", [0.3, 0.6, -0.4, -1.0])
    def test_planar_generalized_gaussian_mass(self, beta):
        spec = dens.generalized_gaussian(beta, 2)
        R = spec.family.support_radius
        top = R if math.isfinite(R) else np.inf
        radial = lambda r: 2 * math.pi * r * float(spec.pdf(np.array([r, 0.0])))
        mass, _ = integrate.quad(radial, 0.0, top, limit=400)
        assert_allclose(mass, 1.0, atol=1e-8)

    def test_generalized_gaussian_parameter_bound(self):
        with pytest.raises(ValueError):
            dens.generalized_gaussian(0.8, 2)

    def test_concavity_metadata(self):
        assert dens.gaussian(0.0, 1.0).concavity_class.log_concave
        assert dens.uniform_disk().concavity_class.log_concave
        assert not dens.exponential_power(0.5).concavity_class.log_concave
        with pytest.raises(ValueError):
            dens.DensitySpec(dens.gaussian(0.0, 1.0).family, dens.UNKNOWN)


class TestDiscretize:
    def test_uniform_mass(self):
        g = dens.discretize(dens.uniform_interval(-0.5, 0.5), 1.0, 1024)
        assert_allclose(g.mass, 1.0, atol=1e-9)
        assert g.values[0] == 0.0 and g.values[-1] == 0.0

    def test_gaussian_tail_bound(self):
        spec = dens.gaussian(0.0, 1.0)
        g = dens.discretize(spec, 8.0, 1024)
        excluded = 2.0 * stats.norm.sf(8.0)
        assert excluded < 1e-10
        assert dens.tail_mass(spec, 8.0) < 1e-10
        assert_allclose(g.mass, 1.0, atol=1e-12)

    def test_tail_too_heavy(self):
        with pytest.raises(TailMassError):
            dens.discretize(dens.gaussian(0.0, 1.0), 1.0, 1024)

    def test_resolution_floor(self):
        with pytest.raises(ValueError):
            dens.discretize(dens.gaussian(0.0, 1.0), 8.0, 8)

    def test_renormalisation_recorded(self):
        g = dens.discretize(dens.gaussian(0.0, 1.0), 8.0, 1024)
        assert_allclose(g.renormalization, 1.0, atol=1e-6)
        assert g.truncation_radius == 8.0

    @pytest.mark.parametrize("name", ["disk", "square", "gaussian2", "ep-product"])
    def test_planar_grids(self, name):
        g = dens.discretize(fixtures.density(name))
        assert_allclose(g.mass, 1.0, atol=1e-9)
        assert np.all(g.values >= 0)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            GridDensity([0.0], [1.0], np.array([0.0, 2.0, 0.0]))
        with pytest.raises(ValueError):
            GridDensity([0.0], [1.0], np.array([1.0, 0.0]))
        with pytest.raises(ValueError):
            GridDensity([0.0], [1.0], np.array([0.0, -1.0, 2.0, 0.0]))

    def test_scaling_commutes_with_discretisation(self):
        spec = dens.gaussian(0.0, 1.0)
        a = 1.7
        direct = dens.discretize(dens.scale(spec, a), resolution=1024)
        scaled = dens.discretize(spec, resolution=1024).scaled(a)
        x = np.linspace(-6, 6, 301)[:, None]
        assert np.max(np.abs(direct.pdf(x) - scaled.pdf(x))) <= 1e-4


class TestSelfConvolve:
    def test_gaussian_closed_form(self):
        fh = dens.self_convolve(dens.gaussian(0.0, 1.0))
        assert isinstance(fh.family, dens.Gaussian)
        assert_allclose(fh.family.cov, [[2.0]])

    def test_uniform_gives_triangle(self):
        fh = dens.self_convolve(dens.uniform_interval(0.0, 1.0))
        x = np.linspace(-1.2, 1.2, 97)
        assert_allclose(fh.pdf(x[:, None]), np.clip(1 - np.abs(x), 0, None), atol=2e-3)

    @pytest.mark.parametrize("spec", [dens.exponential(1.0), dens.exponential_power(1.5), dens.uniform(SupportBody.regular_polygon(5))], ids=["exp", "ep", "pentagon"])
    def test_exact_symmetry(self, spec):
        g = dens.self_convolve(spec).family
        flip = (slice(None, None, -1),) * g.dim
        assert np.array_equal(g.values, g.values[flip])
        assert_allclose(g.origin, -(g.origin + g.spacing * (np.array(g.shape) - 1)), atol=1e-12)

    def test_product_factorwise(self):
        fh = dens.self_convolve(fixtures.density("ep-product"))
        assert isinstance(fh.family, dens.Product)
        assert fh.symmetric and fh.concavity_class.log_concave
        x = np.array([[0.3, -0.2], [1.0, 0.5]])
        parts = [dens.self_convolve(f).pdf(x[:, k : k + 1]) for k, f in enumerate(fixtures.density("ep-product").family.factors)]
        assert_allclose(fh.pdf(x), parts[0] * parts[1], rtol=1e-15)

    def test_log_concave_flag(self):
        assert dens.self_convolve(dens.exponential(1.0)).concavity_class.log_concave

    def test_symmetric_input_matches_plain_convolution(self):
        spec = dens.uniform_interval(-1.0, 1.0)
        a = dens.self_convolve(spec)
        b = dens.convolve(spec, spec)
        x = np.linspace(-2.5, 2.5, 51)[:, None]
        assert_allclose(a.pdf(x), b.pdf(x), atol=2e-3)


class TestConvolve:
    def test_gaussian_pair(self):
        s = dens.convolve(dens.gaussian(1.0, 1.0), dens.gaussian(-0.5, 3.0))
        assert_allclose(s.family.mean, [0.5])
        assert_allclose(s.family.cov, [[4.0]])

    def test_uniform_plus_gaussian(self):
        s = dens.convolve(dens.uniform_interval(0.0, 1.0), dens.gaussian(0.0, 1.0))
        x = np.linspace(-3, 4, 29)
        exact = stats.norm.cdf(x) - stats.norm.cdf(x - 1.0)
        assert_allclose(s.pdf(x[:, None]), exact, atol=1e-5)
        assert_allclose(s.family.mass, 1.0, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            dens.convolve(dens.gaussian(0.0, 1.0), dens.uniform_disk())


class TestMarginals:
    def test_gaussian_rotation_invariance(self):
        m = dens.marginal_along(fixtures.density("gaussian2"), [0.6, 0.8])
        assert isinstance(m.family, dens.Gaussian)
        assert_allclose(m.family.cov, [[1.0]], rtol=1e-14)

    def test_square_axis(self):
        m = dens.marginal_along(fixtures.density("square"), [1.0, 0.0])
        x = np.array([-0.4, 0.0, 0.3])
        assert_allclose(m.pdf(x[:, None]), 1.0, atol=1e-9)

    def test_square_diagonal_triangle(self):
        v = np.array([1.0, 1.0]) / math.sqrt(2.0)
        m = dens.marginal_along(fixtures.density("square"), v)
        x = np.linspace(-0.6, 0.6, 25)
        tri = np.clip(math.sqrt(2.0) - 2.0 * np.abs(x), 0.0, None)
        assert_allclose(m.pdf(x[:, None]), tri, atol=2e-3)
        assert_allclose(m.family.mass, 1.0, atol=1e-6)

    def test_non_unit_direction_rejected(self):
        with pytest.raises(ValueError):
            dens.marginal_along(fixtures.density("square"), [1.0, 1.0])

    def test_grid_marginal_against_sections(self):
        g = dens.discretize(fixtures.density("gaussian2-corr"))
        v = np.array([math.cos(0.4), math.sin(0.4)])
        m = dens.marginal_along(g, v)
        assert_allclose(m.family.mass, 1.0, atol=1e-6)
        t = m.family.axes()[0][::40]
        assert_allclose(m.family.values[::40], dens.section_integral(g, v, t), atol=1e-6)


class TestSections:
    def test_disk_centre(self):
        assert_allclose(dens.section_integral(dens.uniform_disk(), [1.0, 0.0], 0.0), 2.0 / math.pi, rtol=1e-14)

    def test_disk_miss(self):
        assert dens.section_integral(dens.uniform_disk(), [0.0, 1.0], 1.5) == 0.0

    def test_gaussian_centre(self):
        v = [math.cos(1.0), math.sin(1.0)]
        assert_allclose(dens.section_integral(fixtures.density("gaussian2"), v, 0.0), 1.0 / SQRT2PI, rtol=1e-12)

    def test_grid_section_of_disk(self):
        g = dens.discretize(dens.uniform_disk())
        assert_allclose(dens.section_integral(g, [0.0, 1.0], 0.0), 2.0 / math.pi, rtol=2e-3)


class TestSampling:
    def test_uniform_mean(self):
        x = dens.sample(dens.uniform_interval(0.0, 1.0), 7, 10**5)
        assert abs(x.mean() - 0.5) < 0.005

    def test_gaussian_variance(self):
        x = dens.sample(dens.gaussian(0.0, 1.0), 11, 10**5)
        assert abs(x.var() - 1.0) < 0.02

    def test_deterministic(self):
        a = dens.sample(fixtures.density("disk"), 3, 100)
        b = dens.sample(fixtures.density("disk"), 3, 100)
        assert np.array_equal(a, b)

    def test_count_zero(self):
        with pytest.raises(ValueError):
            dens.sample(dens.gaussian(0.0, 1.0), 0, 0)

    def test_grid_sampling(self):
        g = dens.discretize(dens.exponential(1.0), resolution=2048)
        x = dens.sample(g, 5, 10**5)
        assert abs(x.mean() - 1.0) < 0.02
