"""Update steps for the two geometries plus plain SGD.

Sphere rows move along the tangent projection of the ambient gradient,
scaled by the alignment prefactor, and are retracted by radial projection;
ball rows follow the conformal-factor-squared scaling and are clamped back
inside the ball. Rows with zero gradient never move.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .manifold import clamp_to_ball, project_to_sphere


@dataclass
class OptimConfig:
    eta: float = 0.1
    epochs: int = 200
    patience: int = 20
    # the validation monitor engages here; earlier epochs neither count
    # toward patience nor become restore snapshots, because the few
    # validation pairs rank a lucky random init above half-trained states
    min_epochs: int = 200
    batch_edges: int | None = 256
    rsgd_prefactor: bool = True
    dense_max_nodes: int = 800
    # raw scalars see stiff curvature (the radial normalizer's slope grows
    # like d^2 * zeta), so their gradients are clipped before the step
    grad_clip: float = 10.0
    # decoder/prior scalars move slower than embeddings: a saturated channel
    # bias is a cheap early win that kills the gradient into the geometry
    scalar_eta_factor: float = 1.0


def rsgd_sphere_step(
    z: np.ndarray,
    grad: np.ndarray,
    eta: float,
    w_s: float,
    prefactor: bool = True,
) -> np.ndarray:
    """Riemannian step on the radius-``w_s`` sphere (row-wise).

    The tangent component uses the radius-corrected projector
    (I - z z^T / w_s^2); the optional prefactor 1 + z.g/|g| rescales the
    step by the gradient's radial alignment.
    """
    gnorm = np.linalg.norm(grad, axis=-1, keepdims=True)
    moving = gnorm > 0.0
    zg = np.sum(z * grad, axis=-1, keepdims=True)
    tangent = grad - z * zg / (w_s * w_s)
    if prefactor:
        pre = 1.0 + zg / np.where(moving, gnorm, 1.0)
    else:
        pre = 1.0
    stepped = project_to_sphere(z - eta * pre * tangent, w_s)
    return np.where(moving, stepped, z)


def rsgd_ball_step(z: np.ndarray, grad: np.ndarray, eta: float) -> np.ndarray:
    """Riemannian step in the ball: scale by ((1 - |z|^2)/2)^2, then clamp."""
    gnorm = np.linalg.norm(grad, axis=-1, keepdims=True)
    factor = ((1.0 - np.sum(z * z, axis=-1, keepdims=True)) / 2.0) ** 2
    stepped = clamp_to_ball(z - eta * factor * grad)
    return np.where(gnorm > 0.0, stepped, z)


def sgd_step(x, grad, eta: float):
    """Plain gradient step on unconstrained values (arrays or scalars)."""
    if grad is None:
        return x
    return x - eta * grad
