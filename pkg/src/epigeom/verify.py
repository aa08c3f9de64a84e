"""Numerical checks of entropy power inequalities and body identities.

Every check returns a :class:`CheckReport`. Its verdict follows one rule:

* ``holds`` when ``margin >= -tolerance``;
* otherwise ``inconclusive`` when the error estimate exceeds ``|margin|``;
* otherwise ``violated``.

Checks of statements that are only conjectured carry ``asserting=False``;
their verdicts are data and never fail a run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import bodies, exponent, renyi
from . import densities as dens
from .densities import DensitySpec, GridDensity, UniformBody
from .geometry import SupportBody, as_direction, perpendicular
from .specio import digest

TOL_CLOSED = 1e-6
TOL_GRID = 1e-3
TOL_EXACT = 1e-9
TOL_CONVEXITY = 1e-6
LAMBDA_GRID = 21

HOLDS = "holds"
VIOLATED = "violated"
INCONCLUSIVE = "inconclusive"


def verdict_for(margin: float, tolerance: float, error_estimate: float) -> str:
    if margin >= -tolerance:
        return HOLDS
    if error_estimate > abs(margin):
        return INCONCLUSIVE
    return VIOLATED


@dataclass(frozen=True)
class CheckReport:
    name: str
    inputs_digest: str
    lhs: float
    rhs: float
    margin: float
    tolerance: float
    error_estimate: float = 0.0
    asserting: bool = True
    details: dict = field(default_factory=dict, compare=False)

    @property
    def verdict(self) -> str:
        if math.isnan(self.margin):
            return INCONCLUSIVE
        return verdict_for(self.margin, self.tolerance, self.error_estimate)

    @property
    def holds(self) -> bool:
        return self.verdict == HOLDS

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "inputs_digest": self.inputs_digest,
            "lhs": _finite_or_str(self.lhs),
            "rhs": _finite_or_str(self.rhs),
            "margin": _finite_or_str(self.margin),
            "tolerance": self.tolerance,
            "error_estimate": self.error_estimate,
            "verdict": self.verdict,
            "asserting": self.asserting,
            "details": _jsonable(self.details),
        }


def _finite_or_str(x: float):
    x = float(x)
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        return _finite_or_str(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _report(name, inputs, lhs, rhs, margin, tolerance, error=0.0, asserting=True, **details) -> CheckReport:
    return CheckReport(name, digest(inputs), float(lhs), float(rhs), float(margin), float(tolerance), float(error), asserting, details)


def _is_analytic(*specs) -> bool:
    return not any(s.is_grid for s in specs)


# ---------------------------------------------------------------------------
# forward EPI


def _entropy(spec, p):
    return renyi.renyi_entropy(spec, p)


def _power_alpha(res: renyi.EntropyResult, alpha: float) -> tuple[float, float]:
    """``N_p^alpha`` and its propagated error."""
    val = res.N_p**alpha
    return val, val * 2.0 * alpha / res.dim * res.error_estimate


def _default_alpha(p: float, alpha: float | None) -> float:
    return exponent.alpha(p) if alpha is None else float(alpha)


def _closed_pair(fX, fY) -> bool:
    """Whether the sum of the pair stays in closed form (two Gaussians)."""
    return isinstance(fX.family, dens.Gaussian) and isinstance(fY.family, dens.Gaussian)


def check_epi(fX, fY, p: float, alpha: float | None = None, *, tolerance: float | None = None) -> CheckReport:
    """``N_p^α(X+Y) >= N_p^α(X) + N_p^α(Y)`` for independent ``X, Y`` (``p > 1``)."""
    fX, fY = dens.as_spec(fX), dens.as_spec(fY)
    p = float(p)
    if not p > 1:
        raise ValueError("the EPI check needs p > 1")
    alpha = _default_alpha(p, alpha)
    hx, hy = _entropy(fX, p), _entropy(fY, p)
    hs = _entropy(dens.convolve(fX, fY), p)
    lhs, e0 = _power_alpha(hs, alpha)
    nx, e1 = _power_alpha(hx, alpha)
    ny, e2 = _power_alpha(hy, alpha)
    rhs = nx + ny
    tol = tolerance if tolerance is not None else (TOL_CLOSED if _closed_pair(fX, fY) else TOL_GRID * rhs)
    inputs = {"check": "epi", "fX": fX, "fY": fY, "p": p, "alpha": alpha}
    return _report("epi", inputs, lhs, rhs, lhs - rhs, tol, e0 + e1 + e2, True, p=p, alpha=alpha)


def check_linearized(fX, fY, p: float, alpha: float | None, lam: float, *, tolerance: float | None = None) -> CheckReport:
    """``h_p(λ^{1/2α} X + (1-λ)^{1/2α} Y) >= λ h_p(X) + (1-λ) h_p(Y)``."""
    fX, fY = dens.as_spec(fX), dens.as_spec(fY)
    p, lam = float(p), float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError("λ must lie in [0, 1]")
    alpha = _default_alpha(p, alpha)
    hx, hy = _entropy(fX, p), _entropy(fY, p)
    rhs = lam * hx.h_p + (1.0 - lam) * hy.h_p
    if lam == 0.0:
        hs = hy
    elif lam == 1.0:
        hs = hx
    else:
        a, b = lam ** (0.5 / alpha), (1.0 - lam) ** (0.5 / alpha)
        hs = _entropy(dens.convolve(dens.scale(fX, a), dens.scale(fY, b)), p)
    err = hs.error_estimate + lam * hx.error_estimate + (1.0 - lam) * hy.error_estimate
    tol = tolerance if tolerance is not None else (TOL_CLOSED if _closed_pair(fX, fY) else TOL_GRID)
    inputs = {"check": "linearized", "fX": fX, "fY": fY, "p": p, "alpha": alpha, "lambda": lam}
    return _report("linearized", inputs, hs.h_p, rhs, hs.h_p - rhs, tol, err, True, p=p, alpha=alpha, lam=lam)


def linearized_sweep(fX, fY, p: float, alpha: float | None = None, count: int = LAMBDA_GRID) -> list[CheckReport]:
    return [check_linearized(fX, fY, p, alpha, lam) for lam in np.linspace(0.0, 1.0, count)]


def balancing_lambda(fX, fY, p: float, alpha: float | None = None) -> float:
    """``λ* = N_p^α(X) / (N_p^α(X) + N_p^α(Y))``."""
    alpha = _default_alpha(float(p), alpha)
    nx = _entropy(fX, p).N_p
    ny = _entropy(fY, p).N_p
    if not (math.isfinite(nx) and math.isfinite(ny)) or nx <= 0 or ny <= 0:
        raise ValueError("balancing λ needs finite, positive entropy powers")
    # ratio form avoids overflow of N^alpha for large alpha
    return 1.0 / (1.0 + (ny / nx) ** alpha)


def balance_residual(fX, fY, p: float, alpha: float, lam: float) -> float:
    """``h_p(λ^{-1/2α} X) - h_p((1-λ)^{-1/2α} Y)``, each side computed on the rescaled density."""
    hx = _entropy(dens.scale(fX, lam ** (-0.5 / alpha)), p).h_p
    hy = _entropy(dens.scale(fY, (1.0 - lam) ** (-0.5 / alpha)), p).h_p
    return hx - hy


def check_balance(fX, fY, p: float, alpha: float | None = None, *, tolerance: float = TOL_CLOSED) -> CheckReport:
    """At the balancing ``λ*`` the two rescaled entropies coincide."""
    fX, fY = dens.as_spec(fX), dens.as_spec(fY)
    p = float(p)
    alpha = _default_alpha(p, alpha)
    lam = balancing_lambda(fX, fY, p, alpha)
    res = balance_residual(fX, fY, p, alpha, lam)
    inputs = {"check": "balance", "fX": fX, "fY": fY, "p": p, "alpha": alpha}
    return _report("balance", inputs, res, 0.0, -abs(res), tolerance, 0.0, True, p=p, alpha=alpha, lam=lam)


# ---------------------------------------------------------------------------
# reverse EPI for dependent coordinates


@dataclass(frozen=True)
class JointDensity2D:
    """A planar density of ``(X, Y)``; ``symmetric`` means ``f(x, y) = f(-x, -y)``."""

    spec: DensitySpec
    symmetric: bool = True

    def __post_init__(self):
        spec = dens.as_spec(self.spec)
        object.__setattr__(self, "spec", spec)
        if spec.dim != 2:
            raise ValueError("joint densities are planar")
        if self.symmetric and not spec.symmetric:
            raise ValueError("the joint density is not symmetric under (x, y) -> (-x, -y)")

    @property
    def concavity_class(self):
        return self.spec.concavity_class


def _as_joint(joint) -> JointDensity2D:
    return joint if isinstance(joint, JointDensity2D) else JointDensity2D(dens.as_spec(joint))


def _combination_entropy(spec: DensitySpec, a: float, b: float, p: float) -> renyi.EntropyResult:
    """Entropy of ``aX + bY`` for a planar law of ``(X, Y)``."""
    w = np.array([a, b], dtype=float)
    norm = float(np.linalg.norm(w))
    u = w / norm
    if p == 0.0:
        width = renyi.support_range(spec, u)
        if width is not None:
            h = math.log(norm * width) if math.isfinite(width) else math.inf
            return renyi._result(0.0, h, 1, renyi.CLOSED_FORM, 0.0)
    fam = spec.family
    if isinstance(fam, GridDensity) and a == b and np.allclose(fam.spacing[0], fam.spacing[1]):
        res = renyi.renyi_entropy(_antidiagonal_pushforward(fam), p)
        h = res.h_p + math.log(abs(a))
        return renyi._result(p, h, 1, res.method, res.error_estimate)
    res = renyi.marginal_entropy(spec, u, p)
    return renyi._result(p, res.h_p + math.log(norm), 1, res.method, res.error_estimate)


def _antidiagonal_pushforward(g: GridDensity) -> DensitySpec:
    """Density of ``X + Y`` from a square-celled grid: trapezoidal sums along anti-diagonals."""
    h = float(g.spacing[0])
    vals = g.values
    n0, n1 = vals.shape
    flipped = vals[:, ::-1]
    sums = np.array([np.trace(flipped, offset=k) for k in range(n1 - 1, -n0, -1)]) * h
    sums = np.clip(sums, 0.0, None)
    sums /= sums.sum() * h
    origin = g.origin[0] + g.origin[1]
    return dens.from_grid(GridDensity(np.array([origin]), np.array([h]), sums, check=False))


def check_reverse_epi(joint, p: float, *, tolerance: float | None = None) -> CheckReport:
    """``N_p^{1/2}(X+Y) <= N_p^{1/2}(X) + N_p^{1/2}(Y)`` for a symmetric planar law.

    Asserting only at ``p ∈ {0, 2}``; other orders are reported as data.
    """
    joint = _as_joint(joint)
    if not joint.symmetric:
        raise ValueError("reverse EPI checks need a symmetric joint density")
    spec = joint.spec
    p = float(p)
    hs = _combination_entropy(spec, 1.0, 1.0, p)
    hx = _combination_entropy(spec, 1.0, 0.0, p)
    hy = _combination_entropy(spec, 0.0, 1.0, p)
    root = lambda r: math.exp(r.h_p) if math.isfinite(r.h_p) else math.inf
    lhs = root(hs)
    rhs = root(hx) + root(hy)
    if math.isinf(lhs) and math.isinf(rhs):
        margin, err = 0.0, 0.0
    else:
        margin = rhs - lhs
        err = lhs * hs.error_estimate + root(hx) * hx.error_estimate + root(hy) * hy.error_estimate
    exact = p == 0.0 and renyi.support_range(spec, np.array([1.0, 0.0])) is not None
    if tolerance is None:
        tolerance = TOL_EXACT if exact else (TOL_CLOSED if isinstance(spec.family, dens.Gaussian) else TOL_GRID * max(rhs, 1.0) if math.isfinite(rhs) else TOL_GRID)
    asserting = p in (0.0, 2.0) and spec.concavity_class.log_concave
    inputs = {"check": "reverse-epi", "joint": spec, "p": p}
    return _report("reverse-epi", inputs, lhs, rhs, margin, tolerance, err, asserting, p=p)


def check_entropy_convexity(joint, p: float, lams=LAMBDA_GRID, *, tolerance: float = TOL_GRID) -> CheckReport:
    """Midpoint convexity of ``λ ↦ h_p(λX + (1-λ)Y)`` and the bound ``h_p(λX + (1-λ)Y) <= h_p(X)``.

    Both are conjectural in general, so the report is informational; the
    violations found are listed in ``details``.
    """
    joint = _as_joint(joint)
    spec = joint.spec
    p = float(p)
    grid = np.linspace(0.0, 1.0, lams) if isinstance(lams, (int, np.integer)) else np.asarray(lams, dtype=float)
    hx = _combination_entropy(spec, 1.0, 0.0, p)
    hy = _combination_entropy(spec, 0.0, 1.0, p)
    if abs(hx.h_p - hy.h_p) > 1e-4:
        raise ValueError(f"marginal entropies differ: h_p(X) = {hx.h_p:.6g}, h_p(Y) = {hy.h_p:.6g}")
    h = np.array([_combination_entropy(spec, lam, 1.0 - lam, p).h_p if 0 < lam < 1 else (hx.h_p if lam == 1 else hy.h_p) for lam in grid])
    convex_slack = 0.5 * (h[:-2] + h[2:]) - h[1:-1]
    bound_slack = hx.h_p - h
    convex_bad = [float(grid[i + 1]) for i in np.flatnonzero(convex_slack < -tolerance)]
    bound_bad = [float(grid[i]) for i in np.flatnonzero(bound_slack < -tolerance)]
    margin = float(min(convex_slack.min(initial=math.inf), bound_slack.min()))
    inputs = {"check": "entropy-convexity", "joint": spec, "p": p, "lambdas": grid}
    return _report(
        "entropy-convexity", inputs, float(h.max()), hx.h_p, margin, tolerance, 0.0, False,
        p=p, lambdas=grid, entropies=h, convexity_violations=convex_bad, bound_violations=bound_bad,
    )


def dct_lower_check(fX, fY, lam: float, *, tolerance: float = TOL_EXACT) -> CheckReport:
    """``h_0(λX + (1-λ)Y) >= λ h_0(X) + (1-λ) h_0(Y)`` in support-volume form (independent ``X, Y``)."""
    fX, fY = dens.as_spec(fX), dens.as_spec(fY)
    lam = float(lam)
    if not 0.0 <= lam <= 1.0:
        raise ValueError("λ must lie in [0, 1]")
    KX, KY = _support_body(fX), _support_body(fY)
    vx, vy = KX.volume(), KY.volume()
    if lam == 0.0:
        vs = vy
    elif lam == 1.0:
        vs = vx
    else:
        vs = _minkowski_volume(KX, KY, lam, 1.0 - lam)
    lhs = math.log(vs)
    rhs = lam * math.log(vx) + (1.0 - lam) * math.log(vy)
    inputs = {"check": "dct-lower", "fX": fX, "fY": fY, "lambda": lam}
    return _report("dct-lower", inputs, lhs, rhs, lhs - rhs, tolerance, 0.0, True, lam=lam)


def _support_body(spec: DensitySpec) -> SupportBody:
    # Minkowski-sum volumes do not see translations, so the centred body suffices
    fam = spec.family
    if isinstance(fam, UniformBody):
        return fam.body
    if isinstance(fam, dens.GeneralizedGaussian) and fam.beta > 0:
        return SupportBody.ball(fam.support_radius, fam.dim)
    raise ValueError("support-volume checks need compactly supported densities with a known support")


def _minkowski_volume(A: SupportBody, B: SupportBody, a: float, b: float) -> float:
    if A.dim == 1:
        return a * A.volume() + b * B.volume()
    if A.kind == "ball" and B.kind == "ball":
        return SupportBody.ball(a * A.radius + b * B.radius, A.dim).volume()
    if A.kind == "ball" or B.kind == "ball":
        # Steiner formula in the plane: |P + rD| = |P| + r per(P) + π r^2
        P, ball, s, t = (B, A, b, a) if A.kind == "ball" else (A, B, a, b)
        verts = s * P.vertex_array()
        per = _perimeter(verts)
        r = t * ball.radius
        return s * s * P.volume() + r * per + math.pi * r * r
    va, vb = a * A.vertex_array(), b * B.vertex_array()
    sums = (va[:, None, :] + vb[None, :, :]).reshape(-1, A.dim)
    from scipy.spatial import ConvexHull

    return float(ConvexHull(sums).volume)


def _perimeter(verts) -> float:
    from scipy.spatial import ConvexHull

    hull = verts[ConvexHull(verts).vertices]
    return float(np.sum(np.linalg.norm(hull - np.roll(hull, 1, axis=0), axis=1)))


# ---------------------------------------------------------------------------
# body identities


def _identity_report(name, inputs, values: dict, tolerance: float, error: float, **extra) -> CheckReport:
    """Report the largest pairwise relative gap among equally indexed radius arrays."""
    keys = list(values)
    worst = 0.0
    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            a, b = values[keys[i]], values[keys[j]]
            worst = max(worst, float(np.max(np.abs(a - b) / np.abs(b))))
    details = {k: v for k, v in values.items()}
    details.update(extra)
    return _report(name, inputs, worst, 0.0, -worst, tolerance, error, True, **details)


def check_identity_c1(f, dirs=64, *, resolution: int | None = None, tolerance: float = TOL_GRID) -> CheckReport:
    """``C_1(f) = I(f̂) = (n-1) I(R_{n-1}(f))`` on a planar density."""
    spec = dens.as_spec(f)
    if spec.dim != 2:
        raise ValueError("the C_1 identity check is implemented for planar densities")
    dirs = bodies.direction_set(2, dirs)
    C1 = bodies.cross_section_body(spec, 1.0, dirs, verify=False)
    fhat = dens.self_convolve(spec, resolution)
    Ifh = bodies.intersection_body_of_density(fhat, dirs)
    perps = np.array([perpendicular(v) for v in dirs])
    R1 = bodies.radial_mean_body(spec, 1.0, np.vstack([perps, -perps]))
    IR = np.array([bodies.intersection_body_of_starbody(R1, v) for v in dirs])
    values = {"C1": C1.radii.copy(), "I_fhat": Ifh.radii.copy(), "I_R": IR}
    inputs = {"check": "identity-c1", "f": spec, "dirs": dirs, "resolution": resolution}
    err = C1.error_estimate + R1.error_estimate
    return _identity_report("identity-c1", inputs, values, tolerance, err, directions=dirs)


def check_identity_rp(f, p: float, dirs=64, *, resolution: int | None = None, tolerance: float = TOL_GRID) -> CheckReport:
    """``R_p(f) = B_p(f̂)``."""
    spec = dens.as_spec(f)
    dirs = bodies.direction_set(spec.dim, dirs)
    R = bodies.radial_mean_body(spec, p, dirs)
    Bh = bodies.ball_mean_body(dens.self_convolve(spec, resolution), p, dirs)
    values = {"R_p": R.radii.copy(), "B_p_fhat": Bh.radii.copy()}
    inputs = {"check": "identity-rp", "f": spec, "p": float(p), "dirs": dirs, "resolution": resolution}
    return _identity_report("identity-rp", inputs, values, tolerance, R.error_estimate, directions=dirs, p=float(p))


def check_cminus1(f, dirs=64, *, tolerance: float = TOL_EXACT) -> CheckReport:
    """``C_{-1}(f) = (2K)° = (R_∞ f)°`` for a density supported on a symmetric convex ``K``."""
    spec = dens.as_spec(f)
    fam = spec.family
    if not isinstance(fam, UniformBody):
        raise ValueError("the C_{-1} check needs a density with a known convex support (uniform family)")
    if not (fam.body.symmetric and np.all(fam.center_ == 0)):
        raise ValueError("the support must be origin-symmetric")
    dirs = bodies.direction_set(spec.dim, dirs)
    C = bodies.cross_section_body(spec, -1.0, dirs)
    twoK = fam.body.dilate(2.0)
    Rinf = bodies.radial_mean_body(spec, math.inf, dirs).info["support_body"]
    values = {
        "inv_range": C.radii.copy(),
        "polar_2K": np.asarray(twoK.polar_radial(dirs), dtype=float),
        "polar_R_inf": np.asarray(Rinf.polar_radial(dirs), dtype=float),
    }
    inputs = {"check": "identity-cminus1", "f": spec, "dirs": dirs}
    return _identity_report("identity-cminus1", inputs, values, tolerance, 0.0, directions=dirs)


# ---------------------------------------------------------------------------
# convexity


def convexity_certificate(B: bodies.StarBody, *, tolerance: float = TOL_CONVEXITY) -> CheckReport:
    """Convexity of a symmetric planar star body from its boundary polygon.

    The polygon through ``ρ(θ_i)(cos θ_i, sin θ_i)`` (angular order) is convex
    iff every turn is a left turn; the margin is the smallest normalised
    cross product ``sin(turn angle)`` and the worst triple is reported.
    """
    if B.dim != 2:
        raise ValueError("convexity certificates are implemented for planar bodies")
    anti = bodies.antipode_index(B.directions)
    if np.any(anti < 0) or np.any(np.abs(B.radii - B.radii[anti]) > 1e-9 * np.max(B.radii)):
        raise ValueError("convexity certificates need a symmetric body on an antipodally closed direction set")
    pts = B.boundary()
    e_in = pts - np.roll(pts, 1, axis=0)
    e_out = np.roll(pts, -1, axis=0) - pts
    cross = e_in[:, 0] * e_out[:, 1] - e_in[:, 1] * e_out[:, 0]
    scale = np.linalg.norm(e_in, axis=1) * np.linalg.norm(e_out, axis=1)
    turn = cross / scale
    k = int(np.argmin(turn))
    worst = [np.roll(pts, 1, axis=0)[k].tolist(), pts[k].tolist(), np.roll(pts, -1, axis=0)[k].tolist()]
    inputs = {"check": "convexity", "body": B.to_json()}
    return _report("convexity", inputs, float(turn[k]), 0.0, float(turn[k]), tolerance, 0.0, True, worst_triple=worst, label=B.label)
