import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from epigeom import densities as dens
from epigeom import fixtures, specio
from epigeom.specio import SpecError


class TestRoundTrip:
    @pytest.mark.parametrize("name", sorted(fixtures.DENSITIES))
    def test_fixture(self, name):
        spec = fixtures.density(name)
        back = specio.density_from_json(json.loads(json.dumps(specio.density_to_json(spec))))
        assert back.kind == spec.kind and back.dim == spec.dim
        assert back.concavity_class == spec.concavity_class
        x = np.array([[0.1] * spec.dim, [-0.3] * spec.dim])
        assert_allclose(back.pdf(x), spec.pdf(x), rtol=1e-15)

    def test_grid(self):
        g = dens.discretize(dens.gaussian(0.0, 1.0), 8.0, 64)
        back = specio.density_from_json(specio.density_to_json(g))
        assert np.array_equal(back.family.values, g.values)

    def test_file(self, tmp_path):
        path = tmp_path / "disk.json"
        path.write_text(json.dumps(specio.density_to_json(dens.uniform_disk())))
        assert_allclose(specio.load_density(path).pdf(np.zeros((1, 2))), 1 / math.pi)

    def test_digest_stable(self):
        a = specio.digest({"f": fixtures.density("disk"), "p": 2.0})
        b = specio.digest({"p": 2.0, "f": fixtures.density("disk")})
        assert a == b and len(a) == 16


class TestErrors:
    def test_missing_family(self):
        with pytest.raises(SpecError) as exc:
            specio.density_from_json({"dim": 1}, "x.json")
        assert "x.json" in str(exc.value) and exc.value.field == "family"

    def test_unknown_family(self):
        with pytest.raises(SpecError, match="unknown family"):
            specio.density_from_json({"family": "cauchy"})

    def test_bad_number(self):
        with pytest.raises(SpecError) as exc:
            specio.density_from_json({"family": "exponential", "params": {"rate": "fast"}})
        assert exc.value.field == "params.rate"

    def test_nested_path(self):
        data = {"family": "product", "params": {"factors": [{"family": "gaussian"}, {"family": "exponential_power", "params": {}}]}}
        with pytest.raises(SpecError) as exc:
            specio.density_from_json(data)
        assert exc.value.field == "params.factors[1].params.beta"

    def test_grid_shape(self):
        data = {"family": "grid", "params": {"origin": [0.0], "spacing": [1.0], "shape": [3], "values": [0, 1]}}
        with pytest.raises(SpecError, match="params.values"):
            specio.density_from_json(data)

    def test_dim_mismatch(self):
        with pytest.raises(SpecError) as exc:
            specio.density_from_json({"family": "gaussian", "dim": 2, "params": {"mean": [0.0], "cov": [[1.0]]}})
        assert exc.value.field in ("dim", "params")

    def test_invalid_parameter(self):
        with pytest.raises(SpecError) as exc:
            specio.density_from_json({"family": "gaussian", "params": {"mean": [0.0], "cov": [[-1.0]]}})
        assert exc.value.field == "params"

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{ nope")
        with pytest.raises(SpecError, match="invalid JSON"):
            specio.load_density(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SpecError, match="cannot read"):
            specio.load_density(tmp_path / "absent.json")

    def test_is_value_error(self):
        assert issubclass(SpecError, ValueError)
