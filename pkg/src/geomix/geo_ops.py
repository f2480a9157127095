"""Manifold maps composed from tape primitives.

These mirror the plain-array functions in ``manifold`` but stay
differentiable; they also run on raw arrays (returning arrays) because the
underlying primitives are dual-mode. Norm denominators are floored at a
tiny constant instead of branching, which realizes the zero-vector
subgradient convention; the sphere map additionally patches genuinely zero
rows to the fixed fallback point as a constant (no gradient flows through
the patch).
"""

from __future__ import annotations

import numpy as np

from . import tape as tp
from .manifold import ARTANH_EPS, BALL_MAX_NORM

_NORM_FLOOR = 1e-12


def _raw(x):
    return x.value if isinstance(x, tp.Var) else np.asarray(x, dtype=float)


def sphere_log0(z, w_s: float):
    """Tangent coordinates at the origin for (row-wise) sphere points."""
    n = tp.norm(z, axis=-1, keepdims=True)
    r = tp.artanh(tp.clamp(n, None, 1.0 - ARTANH_EPS))
    return z * (r / tp.clamp(n, _NORM_FLOOR, None))


def sphere_exp0(v, w_s: float):
    """Tangent vectors back to the sphere: tanh stretch, then projection.

    The tanh magnitude is immediately collapsed by the radial projection,
    but composing both keeps the map total and matches the reference
    definition; zero rows land on the fallback point w_s * e1.
    """
    n = tp.norm(v, axis=-1, keepdims=True)
    stretched = v * (tp.tanh(n) / tp.clamp(n, _NORM_FLOOR, None))
    return project_sphere(stretched, w_s)


def project_sphere(x, w_s: float):
    """Radial projection onto the radius-``w_s`` sphere (tape form)."""
    n = tp.norm(x, axis=-1, keepdims=True)
    dead = _raw(n) < _NORM_FLOOR
    if np.any(dead):
        # zero rows go to the fallback point and pass no gradient
        alive = (~dead).astype(float)
        out = (x * alive) * (w_s / tp.clamp(n, _NORM_FLOOR, None))
        patch = np.zeros(_raw(x).shape)
        patch[..., 0] = w_s * dead[..., 0]
        return out + patch
    return x * (w_s / tp.clamp(n, _NORM_FLOOR, None))


def ball_log0(z):
    """Tangent coordinates at the ball origin."""
    n = tp.norm(z, axis=-1, keepdims=True)
    r = tp.artanh(tp.clamp(n, None, 1.0 - ARTANH_EPS))
    return z * (r / tp.clamp(n, _NORM_FLOOR, None))


def ball_exp0(v):
    """Tangent vectors into the open ball, norm capped at the clamp."""
    n = tp.norm(v, axis=-1, keepdims=True)
    scale = tp.clamp(tp.tanh(n), None, BALL_MAX_NORM) / tp.clamp(n, _NORM_FLOOR, None)
    return v * scale


def identity_log0(z):
    return z


def identity_exp0(v):
    return v


def log0_for(space: str, w_s: float):
    """Pick the tangent map for a space tag ('S', 'H', or 'E')."""
    if space == "S":
        return lambda z: sphere_log0(z, w_s)
    if space == "H":
        return ball_log0
    if space == "E":
        return identity_log0
    raise ValueError(f"unknown space {space!r}")


def exp0_for(space: str, w_s: float):
    """Pick the manifold map for a space tag ('S', 'H', or 'E')."""
    if space == "S":
        return lambda v: sphere_exp0(v, w_s)
    if space == "H":
        return ball_exp0
    if space == "E":
        return identity_exp0
    raise ValueError(f"unknown space {space!r}")


def poincare_dist_sq(z, center: np.ndarray):
    """Squared ball geodesic distance to a fixed center (tape form).

    The arccosh argument is floored just above 1 so the squared distance
    keeps a finite gradient as z approaches the center.
    """
    center = np.asarray(center, dtype=float)
    diff = z - center
    sq = tp.sum_(diff * diff, axis=-1)
    nz = tp.sum_(z * z, axis=-1)
    nc = float(np.sum(center * center))
    u = 1.0 + (2.0 / (1.0 - nc)) * (sq / (1.0 - nz))
    u = tp.clamp(u, 1.0 + 1e-15, None)
    dist = tp.log(u + tp.sqrt(u * u - 1.0))
    return dist * dist
