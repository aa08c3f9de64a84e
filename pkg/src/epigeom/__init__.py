"""Rényi entropy powers, the sharpened Rényi EPI exponent, and convex bodies built from densities."""

__version__ = "0.1.0"
