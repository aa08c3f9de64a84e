"""Named densities and bodies used by the test suite and reachable from the CLI.

On the command line any ``--density`` argument of the form ``fixture:<name>``
resolves through :data:`DENSITIES`; ``--body fixture:nonconvex`` resolves
through :data:`BODIES`.
"""

from __future__ import annotations

import math

import numpy as np

from . import densities as dens
from .bodies import StarBody
from .geometry import SupportBody, circle_directions


def diamond() -> dens.DensitySpec:
    """Uniform density on the square with vertices ``(±1, 0), (0, ±1)``."""
    return dens.uniform(SupportBody.polytope([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]))


def hexagon() -> dens.DensitySpec:
    return dens.uniform(SupportBody.regular_polygon(6))


def centered_square() -> dens.DensitySpec:
    """Uniform density on ``[-1/2, 1/2]^2``."""
    return dens.uniform_square()


def exponential_power_product() -> dens.DensitySpec:
    """Independent coordinates with ``exp(-|x|)`` and ``exp(-|y|^{3/2})`` profiles."""
    return dens.product([dens.exponential_power(1.0), dens.exponential_power(1.5)])


def correlated_gaussian() -> dens.DensitySpec:
    return dens.gaussian([0.0, 0.0], [[2.0, 0.5], [0.5, 1.0]])


def nonconvex_star(count: int = 360, amplitude: float = 0.5, frequency: int = 4) -> StarBody:
    """The star body ``ρ(θ) = 1 + a cos(kθ)``; not convex for ``a = 1/2, k = 4``."""
    dirs = circle_directions(count)
    theta = np.arctan2(dirs[:, 1], dirs[:, 0])
    return StarBody(2, dirs, 1.0 + amplitude * np.cos(frequency * theta), "nonconvex", True)


DENSITIES = {
    "gaussian1": lambda: dens.gaussian(0.0, 1.0),
    "gaussian1-sigma2": lambda: dens.gaussian(0.0, 4.0),
    "uniform01": lambda: dens.uniform_interval(0.0, 1.0),
    "uniform-sym": lambda: dens.uniform_interval(-1.0, 1.0),
    "laplace": lambda: dens.exponential_power(1.0),
    "exponential": lambda: dens.exponential(1.0),
    "disk": lambda: dens.uniform_disk(),
    "square": centered_square,
    "diamond": diamond,
    "hexagon": hexagon,
    "gaussian2": lambda: dens.gaussian([0.0, 0.0], np.eye(2)),
    "gaussian2-corr": correlated_gaussian,
    "ep-product": exponential_power_product,
}

BODIES = {
    "nonconvex": nonconvex_star,
}

# planar, symmetric, log-concave joints used for the reverse EPI
LOG_CONCAVE_JOINTS = ("square", "diamond", "disk", "gaussian2", "ep-product")


def density(name: str) -> dens.DensitySpec:
    try:
        return DENSITIES[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(sorted(DENSITIES))}") from None


def body(name: str) -> StarBody:
    try:
        return BODIES[name]()
    except KeyError:
        raise KeyError(f"unknown body fixture {name!r}; known: {', '.join(sorted(BODIES))}") from None


def disk_c1_radius() -> float:
    """``C_1`` radius of the uniform unit disk, ``16/(3π²)``."""
    return 16.0 / (3.0 * math.pi**2)
