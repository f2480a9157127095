"""Graph convolution encoders for the two embedding spaces.

Each layer pulls every node to the tangent space at the origin, averages
neighbor coordinates under the symmetrically normalized adjacency (self
loops of weight 1 included), applies a linear map and a pointwise
activation there, and pushes the result back onto the manifold. Hidden
layers use ReLU; the final layer uses a softmax (switchable) before the
manifold map. Spherical outputs therefore always satisfy the radius
invariant and ball outputs stay inside the clamp.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geo_ops
from . import tape as tp
from .manifold import clamp_to_ball, project_to_sphere


@dataclass
class EncoderConfig:
    """Layer widths and activation switches.

    ``dims`` lists every width from input to output, so the number of
    layers is len(dims) - 1; an empty tail (single entry) degenerates to
    the identity encoder that returns the initial features unchanged.
    When ``final_softmax`` is off the last layer applies no activation.
    """

    dims: list[int] = field(default_factory=lambda: [8, 8, 8])
    final_softmax: bool = True

    @property
    def n_layers(self) -> int:
        return len(self.dims) - 1


def normalized_adjacency(n: int, src, dst, weight=None) -> np.ndarray:
    """Dense symmetric normalization of the self-looped adjacency."""
    a = np.zeros((n, n))
    w = np.ones(len(src)) if weight is None else np.asarray(weight, dtype=float)
    a[src, dst] = w
    a[dst, src] = w
    np.fill_diagonal(a, 1.0)
    mass = a.sum(axis=1)  # 1 + weighted degree
    inv = 1.0 / np.sqrt(mass)
    return a * inv[:, None] * inv[None, :]


def init_layer_weights(dims, rng: np.random.Generator) -> list[np.ndarray]:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init, stored (fan_in, fan_out)."""
    out = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        out.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
    return out


def init_node_points(
    n: int, dim: int, w_s: float, rng: np.random.Generator, features=None
):
    """Initial sphere/ball points from Uniform([0,1)) draws or given features.

    Sphere initials are projected to radius w_s; ball initials are rescaled
    by sqrt(dim+1)*1.01 only when they land outside the ball. Supplied
    features are column-truncated or padded with 0.5 to the needed widths,
    then normalized the same way.
    """
    if features is not None:
        feats = np.asarray(features, dtype=float)
        fs = _fit_cols(feats, dim)
        fh = _fit_cols(feats, dim + 1)
    else:
        fs = rng.random((n, dim))
        fh = rng.random((n, dim + 1))
    z_s = project_to_sphere(fs, w_s)
    norms = np.linalg.norm(fh, axis=1, keepdims=True)
    scale = np.where(norms >= 1.0, 1.0 / (np.sqrt(dim + 1) * 1.01), 1.0)
    z_h = clamp_to_ball(fh * scale)
    return z_s, z_h


def _fit_cols(x: np.ndarray, width: int) -> np.ndarray:
    if x.shape[1] >= width:
        return x[:, :width].copy()
    pad = np.full((x.shape[0], width - x.shape[1]), 0.5)
    return np.concatenate([x, pad], axis=1)


def encode(a_hat, z0, weights, cfg: EncoderConfig, space: str, w_s: float = 0.5):
    """Run the layer stack for one space ('S', 'H', or 'E').

    ``z0`` and ``weights`` may be tape variables (training) or plain
    arrays (scoring); the primitives dispatch on their own. Aggregation
    is a dense matrix product, so neighbor sums run in ascending node
    order every time.
    """
    log0 = geo_ops.log0_for(space, w_s)
    exp0 = geo_ops.exp0_for(space, w_s)
    z = z0
    n_layers = len(weights)
    for layer, w in enumerate(weights):
        t = log0(z)
        agg = tp.matmul(a_hat, t)
        h = tp.matmul(agg, w)
        if layer < n_layers - 1:
            act = tp.relu(h)
        elif cfg.final_softmax:
            act = tp.softmax(h, axis=-1)
        else:
            act = h
        z = exp0(act)
    return z


def encode_both(
    a_hat, z0_s, z0_h, weights_s, weights_h, cfg_s, cfg_h, w_s,
    hom_space="S", rank_space="H",
):
    """Encode the homophily and influence embeddings over one adjacency."""
    zs = encode(a_hat, z0_s, weights_s, cfg_s, hom_space, w_s)
    zh = encode(a_hat, z0_h, weights_h, cfg_h, rank_space, w_s)
    return zs, zh
