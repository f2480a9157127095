"""Geometry kernels for the two embedding spaces.

Conventions used across the package: coordinates live on the last axis and
every function broadcasts over leading axes. Homophily embeddings sit on a
sphere of shared radius ``w_s`` in (0, 1); influence embeddings sit in the
open unit Poincare ball, one dimension higher. Both spaces use unit
curvature magnitude, so the radius/scale enters only through ``w_s`` and
the ball clamp.
"""

from __future__ import annotations

import numpy as np

ARCCOS_EPS = 1e-12
ARTANH_EPS = 1e-7
BALL_MAX_NORM = 1.0 - 1e-5


def _check_radius(w_s: float) -> None:
    if not 0.0 < w_s < 1.0:
        raise ValueError(f"sphere radius must lie in (0, 1), got {w_s}")


def _row_norm(x: np.ndarray) -> np.ndarray:
    return np.linalg.norm(x, axis=-1, keepdims=True)


def project_to_sphere(x: np.ndarray, w_s: float) -> np.ndarray:
    """Radially project ambient vectors onto the radius-``w_s`` sphere.

    Zero vectors have no direction; they map to the fixed point
    ``w_s * e1`` so the projection stays total and deterministic.
    """
    _check_radius(w_s)
    x = np.asarray(x, dtype=float)
    n = _row_norm(x)
    fallback = np.zeros_like(x)
    fallback[..., 0] = w_s
    safe = np.where(n > 0.0, n, 1.0)
    return np.where(n > 0.0, w_s * x / safe, fallback)


def sphere_dist(x: np.ndarray, y: np.ndarray, w_s: float) -> np.ndarray:
    """Geodesic distance on the radius-``w_s`` sphere, in [0, pi].

    The inner product is normalized by ``w_s**2`` and clamped just inside
    [-1, 1] before arccos, which keeps antipodal and coincident pairs
    finite and makes the distance of a point to itself exactly representable.
    """
    _check_radius(w_s)
    cos = np.sum(np.asarray(x, dtype=float) * np.asarray(y, dtype=float), axis=-1)
    cos = np.clip(cos / (w_s * w_s), -1.0 + ARCCOS_EPS, 1.0 - ARCCOS_EPS)
    return np.arccos(cos)


def poincare_dist(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Geodesic distance in the Poincare ball."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sq = np.sum((x - y) ** 2, axis=-1)
    den = (1.0 - np.sum(x * x, axis=-1)) * (1.0 - np.sum(y * y, axis=-1))
    arg = 1.0 + 2.0 * sq / den
    return np.arccosh(np.maximum(arg, 1.0))


def norm_diff(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Popularity-rank distance: absolute difference of ambient norms."""
    nx = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
    ny = np.linalg.norm(np.asarray(y, dtype=float), axis=-1)
    return np.abs(nx - ny)


def sphere_log0(z: np.ndarray, w_s: float) -> np.ndarray:
    """Tangent coordinates at the origin for sphere points.

    Well-defined because ``w_s`` < 1 keeps artanh inside its domain; the
    argument is still clamped so ambient inputs slightly off the sphere do
    not blow up.
    """
    _check_radius(w_s)
    z = np.asarray(z, dtype=float)
    n = _row_norm(z)
    safe = np.where(n > 0.0, n, 1.0)
    r = np.arctanh(np.minimum(n, 1.0 - ARTANH_EPS))
    return np.where(n > 0.0, r * z / safe, np.zeros_like(z))


def sphere_exp0(v: np.ndarray, w_s: float) -> np.ndarray:
    """Map tangent vectors at the origin back onto the sphere.

    Composes the tanh magnitude map with the radial projection, so the
    output always satisfies the radius invariant (zero vectors take the
    projection's fallback point).
    """
    _check_radius(w_s)
    v = np.asarray(v, dtype=float)
    n = _row_norm(v)
    safe = np.where(n > 0.0, n, 1.0)
    stretched = np.where(n > 0.0, np.tanh(n) * v / safe, np.zeros_like(v))
    return project_to_sphere(stretched, w_s)


def ball_log0(z: np.ndarray) -> np.ndarray:
    """Tangent coordinates at the ball origin."""
    z = np.asarray(z, dtype=float)
    n = _row_norm(z)
    safe = np.where(n > 0.0, n, 1.0)
    r = np.arctanh(np.minimum(n, 1.0 - ARTANH_EPS))
    return np.where(n > 0.0, r * z / safe, np.zeros_like(z))


def ball_exp0(v: np.ndarray) -> np.ndarray:
    """Map tangent vectors at the origin into the open ball."""
    v = np.asarray(v, dtype=float)
    n = _row_norm(v)
    safe = np.where(n > 0.0, n, 1.0)
    return np.where(n > 0.0, np.tanh(n) * v / safe, np.zeros_like(v))


def clamp_to_ball(x: np.ndarray, max_norm: float = BALL_MAX_NORM) -> np.ndarray:
    """Rescale any row whose norm reaches ``max_norm`` back inside it."""
    x = np.asarray(x, dtype=float)
    n = _row_norm(x)
    scale = np.where(n >= max_norm, max_norm / np.where(n > 0.0, n, 1.0), 1.0)
    return x * scale


def check_on_sphere(x: np.ndarray, w_s: float, tol: float = 1e-9) -> None:
    """Raise if any row leaves the radius-``w_s`` sphere by more than tol."""
    _check_radius(w_s)
    err = np.abs(np.linalg.norm(np.asarray(x, dtype=float), axis=-1) - w_s)
    worst = float(np.max(err)) if err.size else 0.0
    if worst > tol:
        raise ValueError(f"point off the radius-{w_s} sphere by {worst:.3e}")


def check_in_ball(x: np.ndarray) -> None:
    """Raise if any row escapes the open unit ball."""
    n = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
    worst = float(np.max(n)) if n.size else 0.0
    if worst >= 1.0:
        raise ValueError(f"point outside the open unit ball (norm {worst:.6f})")
