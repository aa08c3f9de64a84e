"""Convex bodies with exact support functions, and direction sets on the circle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull

UNIT_TOL = 1e-12


def as_direction(v, *, tol: float = UNIT_TOL) -> np.ndarray:
    """Return ``v`` as a float array, insisting on unit Euclidean norm."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"direction must have unit norm, got |v| = {norm!r}")
    return v


def circle_directions(count: int) -> np.ndarray:
    """Equally spaced unit vectors on S^1, starting at angle 0.

    An even ``count`` makes the set antipodally closed: direction ``i`` and
    ``i + count // 2`` are negatives of each other.
    """
    if count < 2:
        raise ValueError("need at least two directions")
    theta = 2.0 * np.pi * np.arange(count) / count
    return np.column_stack([np.cos(theta), np.sin(theta)])


def line_directions() -> np.ndarray:
    """The two unit vectors of R^1."""
    return np.array([[1.0], [-1.0]])


def default_directions(dim: int, count: int = 360) -> np.ndarray:
    if dim == 1:
        return line_directions()
    if dim == 2:
        return circle_directions(count)
    raise ValueError(f"no default direction set for dim {dim}")


def perpendicular(v: np.ndarray) -> np.ndarray:
    """Counter-clockwise rotation of a planar vector by a right angle."""
    return np.array([-v[1], v[0]])


@dataclass(frozen=True)
class SupportBody:
    """A convex body containing the origin in its interior.

    ``kind`` is one of ``"ball"``, ``"box"`` or ``"polytope"``. Polytopes are
    stored by their vertices; the facet description is derived once.
    """

    kind: str
    dim: int
    radius: float = 0.0
    half_widths: tuple[float, ...] = ()
    vertices: np.ndarray | None = None
    _equations: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == "ball":
            if not self.radius > 0:
                raise ValueError("ball radius must be positive")
        elif self.kind == "box":
            if len(self.half_widths) != self.dim or min(self.half_widths) <= 0:
                raise ValueError("box needs one positive half-width per axis")
        elif self.kind == "polytope":
            verts = np.asarray(self.vertices, dtype=float)
            if verts.ndim != 2 or verts.shape[1] != self.dim:
                raise ValueError("polytope vertices must be an (m, dim) array")
            verts.setflags(write=False)
            object.__setattr__(self, "vertices", verts)
            object.__setattr__(self, "_equations", _facets(verts))
            if np.any(self._equations[:, -1] >= 0):
                raise ValueError("origin must lie in the interior of the polytope")
        else:
            raise ValueError(f"unknown body kind {self.kind!r}")

    # constructors -------------------------------------------------------
    @classmethod
    def ball(cls, radius: float, dim: int = 2) -> "SupportBody":
        return cls("ball", dim, radius=float(radius))

    @classmethod
    def box(cls, half_widths) -> "SupportBody":
        hw = tuple(float(a) for a in np.atleast_1d(half_widths))
        return cls("box", len(hw), half_widths=hw)

    @classmethod
    def polytope(cls, vertices) -> "SupportBody":
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim == 1:
            verts = verts[:, None]
        return cls("polytope", verts.shape[1], vertices=verts)

    @classmethod
    def regular_polygon(cls, sides: int, circumradius: float = 1.0, phase: float = 0.0):
        if sides % 2:
            k = np.arange(sides)
            ang = phase + 2.0 * np.pi * k / sides
            return cls.polytope(circumradius * np.column_stack([np.cos(ang), np.sin(ang)]))
        # even polygons: negate half the vertices so the set is exactly symmetric
        k = np.arange(sides // 2)
        ang = phase + 2.0 * np.pi * k / sides
        half = circumradius * np.column_stack([np.cos(ang), np.sin(ang)])
        return cls.polytope(np.vstack([half, -half]))

    # geometry -----------------------------------------------------------
    @property
    def symmetric(self) -> bool:
        if self.kind in ("ball", "box"):
            return True
        verts = self.vertices
        tol = 1e-12 * max(1.0, float(np.max(np.abs(verts))))
        for v in verts:
            if not np.any(np.all(np.abs(verts + v) <= tol, axis=1)):
                return False
        return True

    def vertex_array(self) -> np.ndarray:
        """Vertices of a box or polytope (balls have none)."""
        if self.kind == "polytope":
            return self.vertices
        if self.kind == "box":
            hw = np.array(self.half_widths)
            signs = np.array(np.meshgrid(*[[-1.0, 1.0]] * self.dim, indexing="ij"))
            return signs.reshape(self.dim, -1).T * hw
        raise ValueError("a ball has no vertices")

    def equations(self) -> np.ndarray:
        """Facet inequalities as rows ``(normal, offset)`` with ``normal.x + offset <= 0``."""
        if self.kind == "polytope":
            return self._equations
        if self.kind == "box":
            rows = []
            for i, a in enumerate(self.half_widths):
                e = np.zeros(self.dim)
                e[i] = 1.0
                rows.append(np.append(e, -a))
                rows.append(np.append(-e, -a))
            return np.array(rows)
        raise ValueError("a ball has no facets")

    def support(self, v) -> np.ndarray | float:
        """Exact support function ``h_K(v) = max_{x in K} v.x``; vectorised over rows of ``v``."""
        v = np.asarray(v, dtype=float)
        scalar = v.ndim == 1
        v = np.atleast_2d(v)
        if self.kind == "ball":
            h = self.radius * np.linalg.norm(v, axis=1)
        elif self.kind == "box":
            h = np.abs(v) @ np.array(self.half_widths)
        else:
            h = np.max(v @ self.vertices.T, axis=1)
        return float(h[0]) if scalar else h

    def radial(self, u) -> np.ndarray | float:
        """Radial function ``rho_K(u) = sup{r >= 0 : r u in K}``."""
        u = np.asarray(u, dtype=float)
        scalar = u.ndim == 1
        u = np.atleast_2d(u)
        if self.kind == "ball":
            r = self.radius / np.linalg.norm(u, axis=1)
        else:
            eq = self.equations()
            normals, offsets = eq[:, :-1], -eq[:, -1]
            proj = u @ normals.T
            with np.errstate(divide="ignore"):
                ratios = np.where(proj > 0, offsets / np.where(proj > 0, proj, 1.0), np.inf)
            r = ratios.min(axis=1)
        return float(r[0]) if scalar else r

    def volume(self) -> float:
        if self.kind == "ball":
            n = self.dim
            return math.pi ** (n / 2) * self.radius**n / math.gamma(n / 2 + 1)
        if self.kind == "box":
            return float(np.prod(2.0 * np.array(self.half_widths)))
        if self.dim == 1:
            return float(np.ptp(self.vertices))
        return float(ConvexHull(self.vertices).volume)

    def bounding_radius(self) -> float:
        if self.kind == "ball":
            return self.radius
        return float(np.max(np.linalg.norm(self.vertex_array(), axis=1)))

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "ball":
            return np.sum(x * x, axis=-1) <= self.radius**2
        if self.kind == "box":
            return np.all(np.abs(x) <= np.array(self.half_widths), axis=-1)
        eq = self.equations()
        return np.all(x @ eq[:, :-1].T + eq[:, -1] <= 1e-12, axis=-1)

    def chord(self, v, t) -> np.ndarray:
        """Length of ``K ∩ {x : x.v = t}`` for a planar body and unit ``v``.

        Vectorised over ``t``; zero where the line misses the body.
        """
        if self.dim != 2:
            raise ValueError("chord lengths are defined for planar bodies")
        v = np.asarray(v, dtype=float)
        t = np.asarray(t, dtype=float)
        if self.kind == "ball":
            return 2.0 * np.sqrt(np.clip(self.radius**2 - t * t, 0.0, None))
        w = perpendicular(v)
        eq = self.equations()
        nv = eq[:, :-1] @ v
        nw = eq[:, :-1] @ w
        off = -eq[:, -1]
        # points t v + s w with nv t + nw s <= off
        rhs = off - np.multiply.outer(t, nv)
        lo = np.full(t.shape, -np.inf)
        hi = np.full(t.shape, np.inf)
        feasible = np.ones(t.shape, dtype=bool)
        for j in range(eq.shape[0]):
            if nw[j] > 1e-15:
                hi = np.minimum(hi, rhs[..., j] / nw[j])
            elif nw[j] < -1e-15:
                lo = np.maximum(lo, rhs[..., j] / nw[j])
            else:
                feasible &= rhs[..., j] >= 0
        return np.where(feasible, np.clip(hi - lo, 0.0, None), 0.0)

    # derived bodies -----------------------------------------------------
    def dilate(self, c: float) -> "SupportBody":
        c = float(c)
        if c <= 0:
            raise ValueError("dilation factor must be positive")
        if self.kind == "ball":
            return SupportBody.ball(c * self.radius, self.dim)
        if self.kind == "box":
            return SupportBody.box([c * a for a in self.half_widths])
        return SupportBody.polytope(c * self.vertices)

    def difference_body(self) -> "SupportBody":
        """``K - K``; equals ``2K`` exactly when ``K`` is symmetric."""
        if self.kind in ("ball", "box"):
            return self.dilate(2.0)
        verts = self.vertices
        diffs = (verts[:, None, :] - verts[None, :, :]).reshape(-1, self.dim)
        if self.dim == 1:
            return SupportBody.polytope(np.array([[diffs.min()], [diffs.max()]]))
        hull = ConvexHull(diffs)
        return SupportBody.polytope(diffs[np.sort(hull.vertices)])

    def polar_radial(self, v) -> np.ndarray | float:
        """Radial function of the polar body, ``1 / h_K(v)``."""
        return 1.0 / self.support(v)

    def to_json(self) -> dict:
        if self.kind == "ball":
            return {"kind": "ball", "dim": self.dim, "radius": self.radius}
        if self.kind == "box":
            return {"kind": "box", "half_widths": list(self.half_widths)}
        return {"kind": "polytope", "vertices": self.vertices.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "SupportBody":
        kind = data.get("kind")
        if kind == "ball":
            return cls.ball(data["radius"], int(data.get("dim", 2)))
        if kind == "box":
            return cls.box(data["half_widths"])
        if kind == "polytope":
            return cls.polytope(data["vertices"])
        raise ValueError(f"body.kind must be ball, box or polytope, got {kind!r}")


# module-level spellings used by the CLI and the checks
def support_function(body: SupportBody, v):
    return body.support(v)


def polar_radial(body: SupportBody, v):
    return body.polar_radial(v)


def dilate(body: SupportBody, c: float) -> SupportBody:
    return body.dilate(c)


def difference_body(body: SupportBody) -> SupportBody:
    return body.difference_body()


def _facets(verts: np.ndarray) -> np.ndarray:
    if verts.shape[1] == 1:
        lo, hi = verts.min(), verts.max()
        return np.array([[1.0, -hi], [-1.0, lo]])
    return ConvexHull(verts).equations
