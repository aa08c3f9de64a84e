"""JSON form of density specs: ``{"family": ..., "dim": n, "params": {...}}``.

Grid densities are stored as ``{origin, spacing, shape, values}`` with the
values flattened in row-major order. Malformed input raises
:class:`SpecError` naming the offending field.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import densities as dens
from .densities import (
    Concavity,
    DensitySpec,
    Exponential,
    ExponentialPower,
    Gaussian,
    GeneralizedGaussian,
    GridDensity,
    Product,
    UniformBody,
)
from .geometry import SupportBody


class SpecError(ValueError):
    """A density or body description that cannot be parsed."""

    def __init__(self, field: str, message: str, source: str | None = None):
        where = f"{source}: " if source else ""
        super().__init__(f"{where}field {field!r}: {message}")
        self.field = field


def density_to_json(spec) -> dict:
    spec = dens.as_spec(spec)
    fam = spec.family
    if isinstance(fam, Gaussian):
        params = {"mean": fam.mean.tolist(), "cov": fam.cov.tolist()}
    elif isinstance(fam, UniformBody):
        params = {"body": fam.body.to_json(), "center": fam.center_.tolist()}
    elif isinstance(fam, Exponential):
        params = {"rate": fam.rate, "sign": fam.sign}
    elif isinstance(fam, ExponentialPower):
        params = {"beta": fam.beta, "scale": fam.scale}
    elif isinstance(fam, GeneralizedGaussian):
        params = {"beta": fam.beta, "scale": fam.scale}
    elif isinstance(fam, Product):
        params = {"factors": [density_to_json(f) for f in fam.factors]}
    elif isinstance(fam, GridDensity):
        params = {
            "origin": fam.origin.tolist(),
            "spacing": fam.spacing.tolist(),
            "shape": list(fam.shape),
            "values": fam.values.ravel().tolist(),
        }
    else:  # pragma: no cover - every family is listed above
        raise TypeError(type(fam).__name__)
    out = {"family": spec.kind, "dim": spec.dim, "params": params}
    cc = spec.concavity_class
    out["concavity"] = {"kind": cc.kind} if cc.s is None else {"kind": cc.kind, "s": cc.s}
    return out


def _get(obj: dict, key: str, path: str, source):
    if not isinstance(obj, dict) or key not in obj:
        raise SpecError(f"{path}{key}", "missing", source)
    return obj[key]


def _number(x, field, source) -> float:
    try:
        return float(x)
    except (TypeError, ValueError):
        raise SpecError(field, f"expected a number, got {x!r}", source) from None


def _array(x, field, source) -> np.ndarray:
    try:
        return np.asarray(x, dtype=float)
    except (TypeError, ValueError):
        raise SpecError(field, "expected a numeric array", source) from None


def density_from_json(data: dict, source: str | None = None, _path: str = "") -> DensitySpec:
    """Parse a density spec; errors mention ``source`` and the field path."""
    family = _get(data, "family", _path, source)
    params = data.get("params", {})
    if not isinstance(params, dict):
        raise SpecError(f"{_path}params", "expected an object", source)
    dim = data.get("dim")
    P = f"{_path}params."
    try:
        if family == "gaussian":
            mean = _array(params.get("mean", np.zeros(int(dim or 1))), P + "mean", source)
            cov = _array(params.get("cov", 1.0), P + "cov", source)
            spec = dens.gaussian(mean, cov, int(dim) if dim else None)
        elif family == "uniform":
            body_data = _get(params, "body", P, source)
            try:
                body = SupportBody.from_json(body_data)
            except KeyError as exc:
                raise SpecError(f"{P}body.{exc.args[0]}", "missing", source) from None
            center = params.get("center")
            spec = dens.uniform(body, None if center is None else _array(center, P + "center", source))
        elif family == "exponential":
            spec = dens.exponential(_number(params.get("rate", 1.0), P + "rate", source), int(params.get("sign", 1)))
        elif family == "exponential_power":
            spec = dens.exponential_power(
                _number(_get(params, "beta", P, source), P + "beta", source),
                _number(params.get("scale", 1.0), P + "scale", source),
            )
        elif family == "generalized_gaussian":
            spec = dens.generalized_gaussian(
                _number(_get(params, "beta", P, source), P + "beta", source),
                int(_get(data, "dim", _path, source)),
                _number(params.get("scale", 1.0), P + "scale", source),
            )
        elif family == "product":
            facs = _get(params, "factors", P, source)
            if not isinstance(facs, list):
                raise SpecError(P + "factors", "expected a list", source)
            spec = dens.product([density_from_json(f, source, f"{P}factors[{i}].") for i, f in enumerate(facs)])
        elif family == "grid":
            shape = tuple(int(s) for s in _get(params, "shape", P, source))
            values = _array(_get(params, "values", P, source), P + "values", source)
            if values.size != int(np.prod(shape)):
                raise SpecError(P + "values", f"has {values.size} entries, shape needs {int(np.prod(shape))}", source)
            grid = GridDensity(
                _array(_get(params, "origin", P, source), P + "origin", source),
                _array(_get(params, "spacing", P, source), P + "spacing", source),
                values.reshape(shape),
            )
            spec = dens.from_grid(grid)
        else:
            raise SpecError(f"{_path}family", f"unknown family {family!r}", source)
    except SpecError:
        raise
    except (ValueError, TypeError) as exc:
        raise SpecError(f"{_path}params", str(exc), source) from None
    if dim is not None and int(dim) != spec.dim:
        raise SpecError(f"{_path}dim", f"is {dim} but the parameters describe dimension {spec.dim}", source)
    cc = data.get("concavity")
    if cc is not None:
        try:
            conc = Concavity(cc["kind"], cc.get("s"))
            spec = DensitySpec(spec.family, conc)
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"{_path}concavity", str(exc), source) from None
    return spec


def load_density(path) -> DensitySpec:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise SpecError("<file>", f"cannot read: {exc.strerror}", str(path)) from None
    except json.JSONDecodeError as exc:
        raise SpecError("<file>", f"invalid JSON ({exc.msg} at line {exc.lineno})", str(path)) from None
    return density_from_json(data, str(path))


def digest(obj) -> str:
    """Short SHA-256 of a canonical JSON rendering."""
    text = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_default)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _default(obj):
    if isinstance(obj, DensitySpec):
        return density_to_json(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if hasattr(obj, "to_json"):
        return obj.to_json()
    raise TypeError(f"cannot digest {type(obj).__name__}")
