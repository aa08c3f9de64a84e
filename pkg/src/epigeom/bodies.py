"""Star bodies built from a density, sampled on a direction set.

Every body here is described by its radial function on a finite set of unit
vectors. The constructions are

* ``C_p(f)``  cross-section body, ``(∫ g_v(t)^{p+1} dt)^{1/p}`` with ``g_v`` the
  hyperplane sections of ``f``;
* ``I(f)``    intersection body, the central section ``g_v(0)``;
* ``R_p(f)``  radial mean body, ``(∫ f(x) ∫_0^∞ r^{p-1} f(x + r v) dr dx)^{1/p}``;
* ``B_p(f)``  Ball's body, ``(∫_0^∞ r^{p-1} f(r v) dr)^{1/p}``;
* ``Γ_p°(f)`` polar centroid body, ``(∫ |v.x|^p f)^{-1/p}``, and its dilate
  ``Z_p(f) = (2/(p+1))^{1/p} Γ_p°(f)``.

Exact convex bodies (polars, dilates, difference bodies) live in
:mod:`epigeom.geometry` and are re-exported here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import densities as dens
from . import renyi
from ._quad import abs_power_weights, bilinear, power_weights
from .densities import (
    DensitySpec,
    Exponential,
    Gaussian,
    GeneralizedGaussian,
    GridDensity,
    Product,
    UniformBody,
)
from .geometry import (  # noqa: F401  (re-exported)
    SupportBody,
    as_direction,
    default_directions,
    difference_body,
    dilate,
    perpendicular,
    polar_radial,
    support_function,
)

SYMMETRY_TOL = 1e-9
TWO_PATH_TOL = 1e-4
# lattice used by the line-autocorrelation route for R_p
AUTOCORR_RESOLUTION = 512
FACTOR_AUTOCORR_RESOLUTION = 1 << 15


@dataclass(frozen=True)
class StarBody:
    """Radial function of a star body sampled on ``directions``.

    ``symmetric`` marks constructions that are origin-symmetric by definition;
    their radii are checked to agree at antipodal directions. ``info`` carries
    per-construction diagnostics and is ignored in comparisons.
    """

    dim: int
    directions: np.ndarray
    radii: np.ndarray
    label: str
    symmetric: bool = False
    error_estimate: float = 0.0
    info: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        dirs = np.atleast_2d(np.asarray(self.directions, dtype=float))
        radii = np.asarray(self.radii, dtype=float).ravel()
        if dirs.shape != (radii.size, self.dim):
            raise ValueError("need one radius per direction")
        if not np.all(np.isfinite(radii)) or np.any(radii <= 0):
            bad = int(np.flatnonzero(~(np.isfinite(radii) & (radii > 0)))[0])
            raise ValueError(f"radius at direction {dirs[bad].tolist()} is {radii[bad]!r}; radii must be positive and finite")
        if self.symmetric:
            anti = antipode_index(dirs)
            has = anti >= 0
            if np.any(np.abs(radii[has] - radii[anti[has]]) > SYMMETRY_TOL * np.maximum(1.0, radii[has])):
                raise ValueError(f"{self.label}: radii differ at antipodal directions")
        dirs.setflags(write=False)
        radii.setflags(write=False)
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "radii", radii)

    @property
    def angles(self) -> np.ndarray:
        if self.dim != 2:
            raise ValueError("angles are defined for planar bodies")
        return np.mod(np.arctan2(self.directions[:, 1], self.directions[:, 0]), 2.0 * np.pi)

    def radius_at(self, u) -> float:
        """Radial function at ``u``, linearly interpolated in angle between stored directions."""
        u = as_direction(u)
        if self.dim == 1:
            k = int(np.argmin(np.abs(self.directions[:, 0] - u[0])))
            return float(self.radii[k])
        hit = np.flatnonzero(np.all(np.abs(self.directions - u) < 1e-12, axis=1))
        if hit.size:
            return float(self.radii[hit[0]])
        ang = self.angles
        order = np.argsort(ang)
        a, r = ang[order], self.radii[order]
        a = np.concatenate([a[-1:] - 2 * np.pi, a, a[:1] + 2 * np.pi])
        r = np.concatenate([r[-1:], r, r[:1]])
        theta = math.atan2(u[1], u[0]) % (2.0 * np.pi)
        return float(np.interp(theta, a, r))

    def boundary(self) -> np.ndarray:
        """Boundary points ``ρ(u) u`` in angular order (planar bodies)."""
        order = np.argsort(self.angles)
        return self.radii[order, None] * self.directions[order]

    def rows(self) -> list[dict]:
        out = []
        for d, r in zip(self.directions, self.radii):
            row = {"angle": float(math.atan2(d[1], d[0]) % (2 * np.pi))} if self.dim == 2 else {}
            row.update({f"u{k}": float(d[k]) for k in range(self.dim)})
            row["radius"] = float(r)
            out.append(row)
        return out

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "label": self.label,
            "symmetric": self.symmetric,
            "directions": self.directions.tolist(),
            "radii": self.radii.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "StarBody":
        try:
            if "radii" in data and "angles" in data:
                ang = np.asarray(data["angles"], dtype=float)
                dirs = np.column_stack([np.cos(ang), np.sin(ang)])
            else:
                dirs = np.asarray(data["directions"], dtype=float)
            radii = np.asarray(data["radii"], dtype=float)
        except KeyError as exc:
            raise ValueError(f"star body JSON is missing field {exc.args[0]!r}") from None
        dim = int(data.get("dim", dirs.shape[1]))
        return cls(dim, dirs, radii, str(data.get("label", "custom")), bool(data.get("symmetric", False)))


def antipode_index(dirs: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Index of ``-u`` for each direction ``u`` in ``dirs``, or -1 if absent."""
    dirs = np.asarray(dirs, dtype=float)
    out = np.full(dirs.shape[0], -1, dtype=int)
    for i, u in enumerate(dirs):
        hit = np.flatnonzero(np.max(np.abs(dirs + u), axis=1) < tol)
        if hit.size:
            out[i] = hit[0]
    return out


def direction_set(dim: int, dirs=None) -> np.ndarray:
    """Normalise a direction argument: ``None``, a count, or an explicit array."""
    if dirs is None:
        return default_directions(dim)
    if isinstance(dirs, (int, np.integer)):
        return default_directions(dim, int(dirs))
    arr = np.atleast_2d(np.asarray(dirs, dtype=float))
    if arr.shape[1] != dim:
        raise ValueError("direction dimension does not match the density")
    for u in arr:
        as_direction(u, tol=1e-9)
    return arr / np.linalg.norm(arr, axis=1, keepdims=True)


def _evaluate(dirs: np.ndarray, fn, symmetric: bool):
    """Apply ``fn`` per direction; antipodal pairs of a symmetric construction share one value."""
    vals = np.empty(dirs.shape[0])
    errs = np.zeros(dirs.shape[0])
    anti = antipode_index(dirs) if symmetric else np.full(dirs.shape[0], -1)
    done = np.zeros(dirs.shape[0], dtype=bool)
    for i, u in enumerate(dirs):
        if anti[i] >= 0 and done[anti[i]]:
            vals[i], errs[i] = vals[anti[i]], errs[anti[i]]
        else:
            vals[i], errs[i] = fn(u)
        done[i] = True
    return vals, errs


def _check_radii(label, dirs, radii):
    bad = ~(np.isfinite(radii) & (radii > 0))
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise ValueError(f"{label}: integral is {radii[k]!r} at direction {dirs[k].tolist()} (divergent or empty)")


# ---------------------------------------------------------------------------
# cross-section and intersection bodies


def cross_section_body(f, p: float, dirs=None, *, verify: bool = True) -> StarBody:
    """``C_p(f)`` for ``p >= -1``, ``p != 0``.

    For ``p > 0`` the radius is the section integral ``(∫ g_v^{p+1})^{1/p}``;
    with ``verify`` the value is also computed as ``N_{p+1}(v.X)^{-1/2}``
    through the entropy module and the largest relative gap is stored in
    ``info["two_path_gap"]``. For ``-1 < p < 0`` only the entropy-power form
    is used; ``p = -1`` is the reciprocal length of the range of ``v.X``.
    """
    spec = dens.as_spec(f)
    p = float(p)
    if p == 0.0:
        raise ValueError("C_p is undefined at p = 0")
    if not p >= -1.0:
        raise ValueError("C_p needs p >= -1")
    dirs = direction_set(spec.dim, dirs)
    info: dict = {"p": p}

    def entropy_path(u):
        N = renyi.marginal_entropy(spec, u, p + 1.0).N_p
        return N ** -0.5

    if p == -1.0:
        def fn(u):
            width = renyi.support_range(spec, u)
            if width is None:
                width = math.exp(renyi.marginal_entropy(spec, u, 0.0).h_p)
            return 1.0 / width, 0.0

        radii, errs = _evaluate(dirs, fn, True)
        info["route"] = "range"
    elif p < 0.0:
        radii, errs = _evaluate(dirs, lambda u: (entropy_path(u), 0.0), True)
        info["route"] = "entropy-power"
    else:
        radii, errs = _evaluate(dirs, lambda u: (_section_power(spec, u, p + 1.0) ** (1.0 / p), 0.0), True)
        info["route"] = "sections"
        if verify:
            other, _ = _evaluate(dirs, lambda u: (entropy_path(u), 0.0), True)
            gaps = np.abs(radii - other) / np.abs(other)
            info["two_path_gap"] = float(gaps.max())
            errs = np.maximum(errs, np.abs(radii - other))
    _check_radii("C_p", dirs, radii)
    return StarBody(spec.dim, dirs, radii, f"C_{p:g}", True, float(errs.max()), info)


def _section_power(spec: DensitySpec, v, q: float) -> float:
    """``∫ g_v(t)^q dt`` for the section function ``g_v``."""
    fam = spec.family
    if spec.dim == 1:
        return _quad_pieces(lambda t: float(fam.pdf(np.array([[t * v[0]]]))[0]) ** q, _pieces_1d(spec, v))
    if isinstance(fam, Gaussian):
        g = fam.project(v)
        m, s = float(g.mean[0]), math.sqrt(float(g.cov[0, 0]))
        pdf = lambda t: float(g.pdf(np.array([[t]]))[0])
        return _quad_pieces(lambda t: pdf(t) ** q, [(-np.inf, m), (m, np.inf)])
    if isinstance(fam, UniformBody):
        lo, hi = fam.range_along(v)
        pts = _chord_breaks(fam, v)
        fn = lambda t: float(fam.section(v, t)) ** q
        val, _ = integrate.quad(fn, lo, hi, points=pts or None, limit=400, epsabs=1e-14, epsrel=1e-12)
        return val
    if isinstance(fam, Product):
        axis = dens._axis_of(v)
        if axis is not None:
            k, sgn = axis
            sub = fam.factors[k]
            return _section_power(sub, np.array([sgn]), q)
        m = dens.marginal_along(spec, v).family
        return float(np.sum(np.clip(m.values, 0.0, None) ** q) * m.spacing[0])
    g = spec.family if isinstance(fam, GridDensity) else dens.discretize(spec)
    D = math.hypot(*(0.5 * g.spacing * (np.array(g.shape) - 1)))
    h = float(np.min(g.spacing))
    n = int(math.ceil(D / h)) + 1
    t = float(v @ g.center()) + h * np.arange(-n, n + 1)
    vals = np.clip(dens._grid_line_integrals(g, v, t), 0.0, None)
    return float(np.sum(vals**q) * h)


def _pieces_1d(spec, v):
    fam = spec.family
    s = float(v[0])
    if isinstance(fam, UniformBody):
        lo, hi = sorted(x * s for x in fam.interval())
        return [(lo, hi)]
    if isinstance(fam, Exponential):
        return [(0.0, np.inf)] if fam.sign * s > 0 else [(-np.inf, 0.0)]
    if isinstance(fam, GeneralizedGaussian) and fam.beta > 0:
        R = fam.support_radius
        return [(-R, 0.0), (0.0, R)]
    c = float(spec.center()[0]) * s
    return [(-np.inf, c), (c, np.inf)]


def _quad_pieces(fn, pieces):
    total = 0.0
    for a, b in pieces:
        total += integrate.quad(fn, a, b, limit=400, epsabs=1e-14, epsrel=1e-12)[0]
    return total


def _chord_breaks(fam: UniformBody, v) -> list[float]:
    if fam.body.kind == "ball":
        return []
    proj = (fam.body.vertex_array() + fam.center_) @ np.asarray(v)
    lo, hi = fam.range_along(v)
    return sorted({float(x) for x in proj if lo < x < hi})


def intersection_body_of_density(f, dirs=None) -> StarBody:
    """``I(f)``: radius is the mass of ``f`` on the central hyperplane ``v⊥``."""
    spec = dens.as_spec(f)
    dirs = direction_set(spec.dim, dirs)
    fam = spec.family
    if spec.dim == 2 and not isinstance(fam, (Gaussian, UniformBody, GridDensity, Product)):
        fam_grid = dens.discretize(spec)
        sect = lambda u: float(dens._grid_line_integrals(fam_grid, u, np.array([0.0]))[0])
    else:
        sect = lambda u: float(dens.section_integral(spec, u, 0.0))
    radii, errs = _evaluate(dirs, lambda u: (sect(u), 0.0), True)
    _check_radii("I(f)", dirs, radii)
    return StarBody(spec.dim, dirs, radii, "I(f)", True, 0.0, {})


def intersection_body_of_starbody(K: StarBody, v) -> float:
    """``|K ∩ v⊥|`` for a planar star body: ``ρ_K(u) + ρ_K(-u)`` with ``u ⊥ v``."""
    if K.dim != 2:
        raise ValueError("intersection radii of star bodies are implemented for dim 2")
    v = as_direction(v)
    u = perpendicular(v)
    return K.radius_at(u) + K.radius_at(-u)


def intersection_body(K: StarBody, dirs=None) -> StarBody:
    """``I(K)`` sampled on ``dirs`` (defaults to ``K``'s own directions)."""
    dirs = K.directions if dirs is None else direction_set(K.dim, dirs)
    radii = np.array([intersection_body_of_starbody(K, u) for u in dirs])
    return StarBody(K.dim, dirs, radii, f"I({K.label})", True, K.error_estimate * 2.0, {})


def star_from_support(body: SupportBody, dirs=None, *, polar: bool = False) -> StarBody:
    """Sample a convex body (or its polar) as a star body."""
    dirs = direction_set(body.dim, dirs)
    radii = body.polar_radial(dirs) if polar else body.radial(dirs)
    label = f"{body.kind}°" if polar else body.kind
    return StarBody(body.dim, dirs, np.asarray(radii), label, body.symmetric, 0.0, {"body": body})


# ---------------------------------------------------------------------------
# radial mean bodies


def radial_mean_body(f, p: float, dirs=None, *, resolution: int | None = None) -> StarBody:
    """``R_p(f)`` for ``p > 0`` or ``p = inf``.

    Uniform densities use the chord formula
    ``ρ^p = ∫ L_v(s)^{p+1} ds / (p (p+1) |K|^2)`` where ``L_v(s)`` are the chord
    lengths parallel to ``v``. Products of 1-D densities factor the
    autocorrelation ``r ↦ ∫ f(x) f(x + r v) dx`` into 1-D autocorrelations of
    the factors, each on a fine grid. Other densities compute it line by line
    on a lattice aligned with ``v``. Error estimates come from halving the
    resolution.

    At ``p = inf`` the radius is that of the difference body of the support;
    ``info["support_body"]`` holds the body when it is known exactly.
    """
    spec = dens.as_spec(f)
    p = float(p)
    if not p > 0:
        raise ValueError("R_p needs p > 0 (or p = inf)")
    dirs = direction_set(spec.dim, dirs)
    info: dict = {"p": p}
    if p == math.inf:
        diff = support_difference_body(spec)
        radii = np.asarray(diff.radial(dirs), dtype=float)
        info["support_body"] = diff
        return StarBody(spec.dim, dirs, radii, "R_inf", True, 0.0, info)
    fam = spec.family
    if isinstance(fam, UniformBody):
        fn = lambda u: (_uniform_rp(fam, u, p), 0.0)
        info["route"] = "chords"
    elif isinstance(fam, Product):
        fine = _FactorAutocorr(fam, resolution or FACTOR_AUTOCORR_RESOLUTION)
        coarse = _FactorAutocorr(fam, (resolution or FACTOR_AUTOCORR_RESOLUTION) // 2)

        def fn(u):
            rho = fine.moment(u, p) ** (1.0 / p)
            return rho, abs(rho - coarse.moment(u, p) ** (1.0 / p))

        info["route"] = "factor autocorrelation"
    else:
        lat = _AutocorrLattice(spec, resolution)
        fn = lambda u: lat.radius(u, p)
        info["route"] = "autocorrelation"
    radii, errs = _evaluate(dirs, fn, True)
    _check_radii("R_p", dirs, radii)
    return StarBody(spec.dim, dirs, radii, f"R_{p:g}", True, float(errs.max()), info)


def support_difference_body(spec: DensitySpec) -> SupportBody:
    """``supp f - supp f`` as an exact convex body, when the support is known."""
    fam = spec.family
    if isinstance(fam, UniformBody):
        return fam.body.difference_body()
    if isinstance(fam, GeneralizedGaussian) and fam.beta > 0:
        return SupportBody.ball(2.0 * fam.support_radius, fam.dim)
    if isinstance(fam, Product):
        halves = []
        for sub in fam.factors:
            if not isinstance(sub.family, UniformBody):
                raise ValueError("R_inf needs bounded support")
            lo, hi = sub.family.interval()
            halves.append(hi - lo)
        return SupportBody.box(halves)
    if isinstance(fam, GridDensity):
        pts = fam.nodes()[fam.values > renyi.SUPPORT_THRESHOLD]
        if fam.dim == 1:
            w = float(np.ptp(pts)) + float(fam.spacing[0])
            return SupportBody.box([w])
        return SupportBody.polytope(_hull_differences(pts, fam.spacing))
    raise ValueError("R_inf is infinite: the density has unbounded support")


def _hull_differences(pts, spacing):
    from scipy.spatial import ConvexHull

    # nodes are cell centres; the support reaches half a cell further
    half = 0.5 * np.asarray(spacing)
    corners = np.array([[sx, sy] for sx in (-1, 1) for sy in (-1, 1)]) * half
    cloud = (pts[:, None, :] + corners[None, :, :]).reshape(-1, 2)
    hull = cloud[ConvexHull(cloud).vertices]
    diffs = (hull[:, None, :] - hull[None, :, :]).reshape(-1, 2)
    return diffs[np.sort(ConvexHull(diffs).vertices)]


def _uniform_rp(fam: UniformBody, v, p: float) -> float:
    K, vol = fam.body, fam.volume
    if fam.dim == 1:
        L = vol
        return (L ** (p + 1.0) / (p * (p + 1.0) * vol**2)) ** (1.0 / p)
    w = perpendicular(v)
    lo, hi = -K.support(-w), K.support(w)
    pts = None
    if K.kind != "ball":
        proj = K.vertex_array() @ w
        pts = sorted({float(x) for x in proj if lo < x < hi}) or None
    fn = lambda s: float(K.chord(w, s)) ** (p + 1.0)
    val, _ = integrate.quad(fn, lo, hi, points=pts, limit=400, epsabs=1e-14, epsrel=1e-12)
    return (val / (p * (p + 1.0) * vol**2)) ** (1.0 / p)


class _FactorAutocorr:
    """``∫ f(x) f(x + r v) dx = ∏_k f̂_k(r v_k)`` for a product density."""

    def __init__(self, fam: Product, resolution: int):
        self.parts = [dens.self_convolve(f, resolution).family for f in fam.factors]
        self.reach = [dens.choose_truncation_radius(dens.as_spec(g)) for g in self.parts]
        steps = [float(g.spacing[0]) for g in self.parts if isinstance(g, GridDensity)]
        self.h = min(steps) if steps else 2.0 * max(self.reach) / (resolution - 1)

    def moment(self, v, p: float) -> float:
        reach = min(R / abs(vk) for R, vk in zip(self.reach, v) if vk != 0.0)
        r = self.h * np.arange(int(math.ceil(reach / self.h)) + 1)
        vals = np.ones_like(r)
        for g, vk in zip(self.parts, v):
            vals = vals * np.clip(g.pdf((r * vk)[:, None]), 0.0, None)
        return float(power_weights(r, p - 1.0) @ vals)


class _AutocorrLattice:
    """Samples of ``f`` on lattices aligned with a direction, for line autocorrelations."""

    def __init__(self, spec: DensitySpec, resolution: int | None):
        self.spec = spec
        fam = spec.family
        res = int(resolution or (dens.DEFAULT_RESOLUTION[1] if spec.dim == 1 else AUTOCORR_RESOLUTION))
        if isinstance(fam, GridDensity):
            self.h = float(np.min(fam.spacing))
            self.D = float(math.hypot(*(0.5 * fam.spacing * (np.array(fam.shape) - 1))))
        else:
            R = dens.choose_truncation_radius(spec, res)
            self.D = R * math.sqrt(spec.dim)
            self.h = 2.0 * R / (res - 1)
        self.center = spec.center()

    def _pdf(self, pts):
        fam = self.spec.family
        if isinstance(fam, GridDensity):
            return bilinear(fam.values, fam.origin, fam.spacing, pts)
        return fam.pdf(pts)

    def samples(self, v) -> np.ndarray:
        n = int(math.ceil(self.D / self.h))
        a = self.h * np.arange(-n, n + 1)
        if self.spec.dim == 1:
            pts = (self.center[0] + a * v[0])[None, :, None]
        else:
            w = perpendicular(v)
            pts = self.center + a[None, :, None] * v + a[:, None, None] * w
        return np.clip(self._pdf(pts), 0.0, None)

    @staticmethod
    def _autocorr(phi: np.ndarray, h: float) -> np.ndarray:
        n = phi.shape[1]
        size = 1 << int(math.ceil(math.log2(2 * n)))
        spec = np.fft.rfft(phi, n=size, axis=1)
        corr = np.fft.irfft(np.abs(spec) ** 2, n=size, axis=1)[:, :n].sum(axis=0)
        scale = h if phi.shape[0] == 1 else h * h
        return np.clip(corr, 0.0, None) * scale

    def moment(self, phi, h, p):
        corr = self._autocorr(phi, h)
        r = h * np.arange(corr.size)
        return float(power_weights(r, p - 1.0) @ corr)

    def radius(self, v, p: float) -> tuple[float, float]:
        phi = self.samples(v)
        fine = self.moment(phi, self.h, p)
        coarse = self.moment(phi[::2, ::2] if phi.shape[0] > 1 else phi[:, ::2], 2.0 * self.h, p)
        rho = fine ** (1.0 / p)
        return rho, abs(rho - coarse ** (1.0 / p))


# ---------------------------------------------------------------------------
# Ball's bodies


def ball_mean_body(f, p: float, dirs=None) -> StarBody:
    """``B_p(f)``: ``(∫_0^∞ r^{p-1} f(r v) dr)^{1/p}``.

    Grids are integrated along the ray with exact power weights on the
    piecewise-linear interpolant; analytic families use adaptive quadrature
    with an algebraic endpoint weight.
    """
    spec = dens.as_spec(f)
    p = float(p)
    if not p > 0:
        raise ValueError("B_p needs p > 0")
    dirs = direction_set(spec.dim, dirs)
    fn = lambda u: (_ray_moment(spec, u, p) ** (1.0 / p), 0.0)
    radii, errs = _evaluate(dirs, fn, spec.symmetric)
    _check_radii("B_p", dirs, radii)
    return StarBody(spec.dim, dirs, radii, f"B_{p:g}", spec.symmetric, 0.0, {"p": p})


def _ray_moment(spec: DensitySpec, v, p: float) -> float:
    fam = spec.family
    if isinstance(fam, GridDensity):
        h = float(np.min(fam.spacing)) / 2.0
        lo = fam.origin
        hi = fam.origin + fam.spacing * (np.array(fam.shape) - 1)
        reach = float(np.max(np.maximum(np.abs(lo), np.abs(hi)))) * math.sqrt(fam.dim)
        r = h * np.arange(int(math.ceil(reach / h)) + 1)
        vals = np.clip(fam.pdf(r[:, None] * v), 0.0, None)
        return float(power_weights(r, p - 1.0) @ vals)
    if isinstance(fam, UniformBody):
        r0, r1 = _ray_interval(fam, v)
        return (r1**p - r0**p) / (p * fam.volume) if r1 > r0 else 0.0
    if isinstance(fam, Product) and any(f.is_grid for f in fam.factors):
        # piecewise-linear factors: exact power weights on a fine ray lattice
        h = min(float(f.family.spacing[0]) for f in fam.factors if f.is_grid) / 2.0
        reach = dens.choose_truncation_radius(spec) * math.sqrt(spec.dim)
        r = h * np.arange(int(math.ceil(reach / h)) + 1)
        vals = np.clip(fam.pdf(r[:, None] * v), 0.0, None)
        return float(power_weights(r, p - 1.0) @ vals)
    R = dens.choose_truncation_radius(spec) * math.sqrt(spec.dim) + float(np.linalg.norm(spec.center()))
    fn = lambda r: float(fam.pdf((r * v)[None, :])[0])
    val, _ = integrate.quad(fn, 0.0, R, weight="alg", wvar=(p - 1.0, 0.0), limit=400, epsabs=1e-14, epsrel=1e-12)
    return val


def _ray_interval(fam: UniformBody, v) -> tuple[float, float]:
    """``{r >= 0 : r v ∈ center + K}`` as an interval."""
    c, K = fam.center_, fam.body
    v = np.asarray(v, dtype=float)
    if K.kind == "ball":
        b = float(v @ c)
        disc = b * b - float(c @ c) + K.radius**2
        if disc <= 0:
            return 0.0, 0.0
        root = math.sqrt(disc)
        return max(b - root, 0.0), max(b + root, 0.0)
    eq = K.equations()
    nrm, off = eq[:, :-1], eq[:, -1]
    # nrm.(r v - c) + off <= 0
    a = nrm @ v
    b = -(off - nrm @ c)
    lo, hi = 0.0, math.inf
    for ai, bi in zip(a, b):
        if ai > 1e-15:
            hi = min(hi, bi / ai)
        elif ai < -1e-15:
            lo = max(lo, bi / ai)
        elif bi < 0:
            return 0.0, 0.0
    return lo, max(hi, lo)


# ---------------------------------------------------------------------------
# polar centroid bodies and their dilates


def absolute_moment(f, v, p: float) -> float:
    """``∫ |v.x|^p f(x) dx`` for ``p > -1``, integrating the marginal of ``v.X``.

    The factor ``|t|^p`` is absorbed into the quadrature weight (algebraic
    weight for analytic marginals, exact product weights for grids), so the
    integrable singularity at ``t = 0`` for ``p < 0`` is handled exactly.
    """
    spec = dens.as_spec(f)
    v = as_direction(v)
    p = float(p)
    if not p > -1.0:
        raise ValueError("absolute moments need p > -1")
    fam = spec.family
    if spec.dim == 1:
        g = lambda t: fam.pdf(np.asarray(t, dtype=float)[..., None] * v[0])
        reach = 4.0 * dens.choose_truncation_radius(spec) + abs(float(spec.center()[0]))
        return _weighted_marginal(g, _pieces_1d(spec, v), p, reach)
    if isinstance(fam, Gaussian):
        proj = fam.project(v)
        m, s = float(proj.mean[0]), math.sqrt(float(proj.cov[0, 0]))
        g = lambda t: proj.pdf(np.asarray(t, dtype=float)[..., None])
        return _weighted_marginal(g, [(m - 40 * s, m + 40 * s)], p)
    if isinstance(fam, UniformBody):
        lo, hi = fam.range_along(v)
        return _weighted_marginal(lambda t: fam.section(v, t), [(lo, hi)], p)
    if isinstance(fam, Product) and dens._axis_of(v) is not None:
        k, sgn = dens._axis_of(v)
        return absolute_moment(fam.factors[k], np.array([sgn]), p)
    marg = dens.marginal_along(spec, v).family
    t = marg.axes()[0]
    return float(abs_power_weights(t, p) @ marg.values)


def _weighted_marginal(g, pieces, p: float, reach: float = 1e3) -> float:
    """``∫ |t|^p g(t) dt`` over ``pieces``, splitting at 0 and cutting infinite ends at ``±reach``."""
    opts = dict(limit=400, epsabs=1e-14, epsrel=1e-12)
    fn = lambda t: float(g(t))
    total = 0.0
    for a, b in pieces:
        a = -reach if a == -np.inf else a
        b = reach if b == np.inf else b
        if a < 0.0 < b:
            total += integrate.quad(fn, 0.0, b, weight="alg", wvar=(p, 0.0), **opts)[0]
            total += integrate.quad(fn, a, 0.0, weight="alg", wvar=(0.0, p), **opts)[0]
        elif a == 0.0:
            total += integrate.quad(fn, a, b, weight="alg", wvar=(p, 0.0), **opts)[0]
        elif b == 0.0:
            total += integrate.quad(fn, a, b, weight="alg", wvar=(0.0, p), **opts)[0]
        else:
            total += integrate.quad(lambda t: abs(t) ** p * fn(t), a, b, **opts)[0]
    return total


def polar_centroid_body(f, p: float, dirs=None) -> StarBody:
    """``Γ_p°(f)``: radius ``(∫ |v.x|^p f)^{-1/p}``; ``p`` may be negative down to ``-1`` (exclusive)."""
    spec = dens.as_spec(f)
    p = _check_centroid_order(p)
    dirs = direction_set(spec.dim, dirs)
    moments, _ = _evaluate(dirs, lambda u: (absolute_moment(spec, u, p), 0.0), True)
    _check_radii("Γ_p moment", dirs, moments)
    radii = moments ** (-1.0 / p)
    return StarBody(spec.dim, dirs, radii, f"Gamma_{p:g}°", True, 0.0, {"p": p, "moments": moments})


def z_dilation(p: float) -> float:
    return (2.0 / (p + 1.0)) ** (1.0 / p)


def z_body(f, p: float, dirs=None) -> StarBody:
    """``Z_p(f) = (2/(p+1))^{1/p} Γ_p°(f)`` for ``p ∈ (-1, ∞) \\ {0}``.

    ``info["rho_pow"]`` holds ``ρ_{Z_p}(v)^{-p} = ((p+1)/2) ∫ |v.x|^p f``, the
    quantity that stays finite as ``p → -1``.
    """
    gamma = polar_centroid_body(f, p, dirs)
    p = float(p)
    radii = z_dilation(p) * gamma.radii
    rho_pow = 0.5 * (p + 1.0) * gamma.info["moments"]
    return StarBody(gamma.dim, gamma.directions, radii, f"Z_{p:g}", True, 0.0, {"p": p, "rho_pow": rho_pow})


def _check_centroid_order(p) -> float:
    p = float(p)
    if p == 0.0 or not p > -1.0:
        raise ValueError("need p > -1 and p != 0")
    return p
