"""The p-cosine and spherical Radon transforms, and identities built on them.

On the circle the Radon transform integrates over the two points orthogonal
to ``v`` with counting measure, so ``R g(v) = g(u) + g(-u)``. With that
convention ``((p + 1)/2) T_p g → R g`` as ``p → -1⁺``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import signal, special

from . import bodies
from . import densities as dens
from ._quad import abs_power_weights, power_weights
from .densities import GridDensity
from .geometry import as_direction, circle_directions, perpendicular

INTERNAL_NODES = 4096
WINDOW_STEPS = 10
EPS_SCHEDULE = (1e-1, 1e-2, 1e-3)
SPHERE_T_NODES = 1025
SPHERE_THETA_NODES = 256


@dataclass(frozen=True)
class SphericalFunction:
    """A function on ``S^{n-1}`` given by samples, by a callable, or both.

    Samples on an equally spaced, antipodally closed circle set are
    interpolated trigonometrically; other planar sets linearly in angle.
    A callable ``func`` (vectorised over rows of unit vectors) takes
    precedence and is required on ``S^2``.
    """

    dim: int
    directions: np.ndarray | None = None
    values: np.ndarray | None = None
    even: bool = False
    func: Callable | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("spherical functions are supported on S^1 and S^2")
        if self.func is None:
            if self.directions is None or self.values is None:
                raise ValueError("need samples or a callable")
            if self.dim != 2:
                raise ValueError("functions on S^2 must be given as a callable")
            dirs = np.atleast_2d(np.asarray(self.directions, dtype=float))
            vals = np.asarray(self.values, dtype=float).ravel()
            if dirs.shape != (vals.size, 2):
                raise ValueError("need one value per direction")
            object.__setattr__(self, "directions", dirs)
            object.__setattr__(self, "values", vals)
            if self.even:
                anti = bodies.antipode_index(dirs)
                has = anti >= 0
                if np.any(np.abs(vals[has] - vals[anti[has]]) > 1e-9 * np.maximum(1.0, np.abs(vals[has]))):
                    raise ValueError("function flagged even differs at antipodal samples")

    @classmethod
    def constant(cls, c: float, dim: int = 2, count: int = 360) -> "SphericalFunction":
        if dim == 2:
            dirs = circle_directions(count)
            return cls(2, dirs, np.full(count, float(c)), True)
        return cls(dim, even=True, func=lambda u: np.full(np.atleast_2d(u).shape[0], float(c)))

    @classmethod
    def from_callable(cls, fn, dim: int = 2, even: bool = False) -> "SphericalFunction":
        return cls(dim, even=even, func=fn)

    @classmethod
    def from_starbody(cls, K: bodies.StarBody, power: float = 1.0) -> "SphericalFunction":
        return cls(K.dim, K.directions, K.radii**power, K.symmetric)

    def combine(self, a: float, other: "SphericalFunction") -> "SphericalFunction":
        """``a * self + other`` on the same sample set."""
        if self.func is not None or other.func is not None:
            f, g = self, other
            return SphericalFunction(self.dim, even=self.even and other.even, func=lambda u: a * f(u) + g(u))
        if not np.array_equal(self.directions, other.directions):
            raise ValueError("sample sets differ")
        return SphericalFunction(self.dim, self.directions, a * self.values + other.values, self.even and other.even)

    def _equally_spaced(self) -> bool:
        n = self.directions.shape[0]
        if n < 4:
            return False
        return bool(np.allclose(self.directions, circle_directions(n), atol=1e-12))

    def on_circle(self, theta: np.ndarray) -> np.ndarray:
        """Values at angles ``theta`` (planar case)."""
        theta = np.asarray(theta, dtype=float)
        if self.func is not None:
            return np.asarray(self.func(np.column_stack([np.cos(theta), np.sin(theta)])), dtype=float)
        if self._equally_spaced():
            return _trig_interp(self.values, theta)
        ang = np.mod(np.arctan2(self.directions[:, 1], self.directions[:, 0]), 2 * np.pi)
        order = np.argsort(ang)
        a, r = ang[order], self.values[order]
        a = np.concatenate([a[-1:] - 2 * np.pi, a, a[:1] + 2 * np.pi])
        r = np.concatenate([r[-1:], r, r[:1]])
        return np.interp(np.mod(theta, 2 * np.pi), a, r)

    def __call__(self, u) -> np.ndarray:
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if self.func is not None:
            return np.asarray(self.func(u), dtype=float)
        return self.on_circle(np.arctan2(u[:, 1], u[:, 0]))


def _trig_interp(values: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Trigonometric interpolation of samples at ``2πk/N`` (Nyquist term split evenly)."""
    n = values.size
    coef = np.fft.fft(values) / n
    k = np.fft.fftfreq(n, 1.0 / n)
    if n % 2 == 0:
        coef = coef.copy()
        coef[n // 2] *= 0.5
        k = np.append(k, n // 2)
        coef = np.append(coef, coef[n // 2])
        k[n // 2] = -n // 2
    phase = np.exp(1j * np.multiply.outer(np.asarray(theta), k))
    return np.real(phase @ coef)


# ---------------------------------------------------------------------------
# transforms


def _check_p(p: float) -> float:
    p = float(p)
    if not p > -1.0:
        raise ValueError("the p-cosine transform needs p > -1")
    return p


def cosine_transform(g: SphericalFunction, p: float, v, *, nodes: int = INTERNAL_NODES) -> float:
    """``T_p g(v) = ∫ |u.v|^p g(u) du`` for ``p > -1``.

    On the circle the integral uses ``nodes`` angles aligned with ``v``.
    Within ``WINDOW_STEPS`` steps of the two points orthogonal to ``v`` the
    weight ``|cos|^p`` is integrated exactly against the value of ``g`` at
    that point (an incomplete Beta function); the rest is the trapezoidal
    rule. On ``S^2`` the integral is taken in the height ``t = u.v`` with
    exact power weights.
    """
    p = _check_p(p)
    v = as_direction(v)
    if v.size != g.dim:
        raise ValueError("direction dimension does not match the function")
    if g.dim == 3:
        return _cosine_s2(g, p, v)
    if nodes % 4 or nodes < 16 * WINDOW_STEPS:
        raise ValueError("nodes must be a multiple of 4 and comfortably larger than the window")
    phi0 = math.atan2(v[1], v[0])
    h = 2.0 * math.pi / nodes
    k = np.arange(nodes)
    vals = g.on_circle(phi0 + h * k)
    q1, q3 = nodes // 4, 3 * nodes // 4
    W = WINDOW_STEPS
    w = np.abs(np.cos(h * k)) ** p * h
    inside = (np.abs(k - q1) < W) | (np.abs(k - q3) < W)
    w[inside] = 0.0
    for edge in (q1 - W, q1 + W, q3 - W, q3 + W):
        w[edge] *= 0.5
    delta = W * h
    window = special.betainc(0.5 * (p + 1.0), 0.5, math.sin(delta) ** 2) * special.beta(0.5 * (p + 1.0), 0.5)
    return float(w @ vals + window * (vals[q1] + vals[q3]))


def _great_circle(v: np.ndarray, t: float, theta: np.ndarray) -> np.ndarray:
    # orthonormal frame (e1, e2) of v⊥
    a = np.array([1.0, 0.0, 0.0]) if abs(v[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = a - (a @ v) * v
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(v, e1)
    s = math.sqrt(max(0.0, 1.0 - t * t))
    return t * v + s * (np.cos(theta)[:, None] * e1 + np.sin(theta)[:, None] * e2)


def _circle_integral(g: SphericalFunction, v, t: float) -> float:
    theta = 2.0 * np.pi * np.arange(SPHERE_THETA_NODES) / SPHERE_THETA_NODES
    return float(np.sum(g(_great_circle(v, t, theta))) * 2.0 * np.pi / SPHERE_THETA_NODES)


def _cosine_s2(g: SphericalFunction, p: float, v) -> float:
    # du = dt dθ on S^2 (Archimedes), so T_p g(v) = ∫ |t|^p G(t) dt
    t = np.linspace(-1.0, 1.0, SPHERE_T_NODES)
    G = np.array([_circle_integral(g, v, ti) for ti in t])
    return float(abs_power_weights(t, p) @ G)


def radon_transform(g: SphericalFunction, v) -> float:
    """``R g(v)``: counting measure on ``{±u}`` for ``n = 2``, arc length on the great circle for ``n = 3``."""
    v = as_direction(v)
    if v.size != g.dim:
        raise ValueError("direction dimension does not match the function")
    if g.dim == 2:
        u = perpendicular(v)
        return float(np.sum(g(np.array([u, -u]))))
    if g.dim == 3:
        return _circle_integral(g, v, 0.0)
    raise ValueError("Radon transform supported for n in {2, 3}")


def tr_limit_check(g: SphericalFunction, v, eps: float) -> tuple[float, float, float]:
    """``(lhs, rhs, gap)`` with ``lhs = ((p+1)/2) T_p g(v)`` at ``p = -1 + eps`` and ``rhs = R g(v)``."""
    eps = float(eps)
    if not 0.0 < eps <= 0.1:
        raise ValueError("eps must lie in (0, 0.1]")
    p = -1.0 + eps
    lhs = 0.5 * eps * cosine_transform(g, p, v)
    rhs = radon_transform(g, v)
    return lhs, rhs, abs(lhs - rhs)


# ---------------------------------------------------------------------------
# identity checks


@dataclass(frozen=True)
class GapReport:
    """Both sides of an identity at each direction, with relative gaps."""

    check: str
    parameter: float
    directions: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def gaps(self) -> np.ndarray:
        return np.abs(self.lhs - self.rhs) / np.abs(self.rhs)

    @property
    def gap(self) -> float:
        return float(self.gaps.max())

    def to_json(self) -> dict:
        return {
            "check": self.check,
            "parameter": self.parameter,
            "max_gap": self.gap,
            "directions": self.directions.tolist(),
            "lhs": self.lhs.tolist(),
            "rhs": self.rhs.tolist(),
        }


def zr_identity_check(f, p: float, dirs=32, *, body_directions: int = 128) -> GapReport:
    """Compare both sides of ``ρ_{Z_p(R_{n+p} f)}(v) = ((1/(n+p)) ∫ f(x) ρ_{Z_p(f_x)}(v)^{-p} dx)^{-1/p}``.

    Left: radii of ``R_{n+p}(f)`` on ``body_directions`` directions, raised to
    ``n + p`` and pushed through ``T_p`` (the Radon transform at ``p = -1``).
    Right: the inner integral equals ``((p+1)/2) E|v.(X' - X)|^p``, computed
    from the autocorrelation of the marginal of ``v.X``.
    """
    spec = dens.as_spec(f)
    p = float(p)
    n = spec.dim
    if n != 2:
        raise ValueError("the identity check is implemented for planar densities")
    if p == 0.0 or p < -1.0 or n + p <= 0:
        raise ValueError("need p >= -1, p != 0")
    dirs = bodies.direction_set(n, dirs)
    R = bodies.radial_mean_body(spec, n + p, body_directions)
    h = SphericalFunction.from_starbody(R, n + p)
    lhs, rhs = [], []
    for v in dirs:
        if p == -1.0:
            left = radon_transform(h, v) / (n + p)
            right = _difference_marginal_at_zero(spec, v) / (n + p)
        else:
            left = 0.5 * (p + 1.0) / (n + p) * cosine_transform(h, p, v)
            right = 0.5 * (p + 1.0) / (n + p) * _difference_moment(spec, v, p)
        lhs.append(left ** (-1.0 / p))
        rhs.append(right ** (-1.0 / p))
    return GapReport("zr", p, dirs, np.array(lhs), np.array(rhs))


def _marginal_grid(spec, v) -> tuple[np.ndarray, np.ndarray]:
    marg = dens.marginal_along(spec, v)
    fam = marg.family
    if isinstance(fam, GridDensity):
        return fam.axes()[0], fam.values
    # analytic marginal (Gaussian): sample it finely
    R = dens.choose_truncation_radius(marg, dens.DEFAULT_RESOLUTION[1])
    c = float(marg.center()[0])
    t = c + np.linspace(-R, R, dens.DEFAULT_RESOLUTION[1])
    return t, fam.pdf(t[:, None])


def _marginal_autocorr(spec, v) -> tuple[np.ndarray, np.ndarray]:
    t, g = _marginal_grid(spec, v)
    h = float(t[1] - t[0])
    c = signal.fftconvolve(g, g[::-1], mode="full")[g.size - 1 :] * h
    return h * np.arange(c.size), np.clip(c, 0.0, None)


def _difference_moment(spec, v, p: float) -> float:
    """``E |v.(X' - X)|^p`` for i.i.d. ``X, X'``."""
    lag, c = _marginal_autocorr(spec, v)
    return 2.0 * float(power_weights(lag, p) @ c)


def _difference_marginal_at_zero(spec, v) -> float:
    _, c = _marginal_autocorr(spec, v)
    return float(c[0])


def zi_limit_check(f, eps: float, dirs=32) -> GapReport:
    """``ρ_{Z_p(f)}(v)^{-p}`` at ``p = -1 + eps`` against ``ρ_{I(f)}(v)``."""
    eps = float(eps)
    if not 0.0 < eps <= 0.1:
        raise ValueError("eps must lie in (0, 0.1]")
    spec = dens.as_spec(f)
    dirs = bodies.direction_set(spec.dim, dirs)
    Z = bodies.z_body(spec, -1.0 + eps, dirs)
    I = bodies.intersection_body_of_density(spec, dirs)
    return GapReport("zi", eps, dirs, np.asarray(Z.info["rho_pow"]), I.radii.copy())


def cn1_radon_check(f, eps: float, dirs=32, *, body_directions: int = 360) -> GapReport:
    """``((p+1)/(2(n-1))) T_p ρ_{C_{n-1}}^{n-1}(v)`` at ``p = -1 + eps`` against ``|C_{n-1}(f) ∩ v⊥|`` (``n = 2``)."""
    eps = float(eps)
    if not 0.0 < eps <= 0.1:
        raise ValueError("eps must lie in (0, 0.1]")
    spec = dens.as_spec(f)
    if spec.dim != 2:
        raise ValueError("the check is implemented for planar densities")
    dirs = bodies.direction_set(2, dirs)
    C = bodies.cross_section_body(spec, 1.0, body_directions, verify=False)
    g = SphericalFunction.from_starbody(C, 1.0)
    p = -1.0 + eps
    lhs = np.array([0.5 * eps * cosine_transform(g, p, v) for v in dirs])
    rhs = np.array([bodies.intersection_body_of_starbody(C, v) for v in dirs])
    return GapReport("cn1", eps, dirs, lhs, rhs)
