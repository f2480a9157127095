"""Mixture link decoder.

A pair of nodes is scored by two squashed-distance channels: a homophily
channel that decays with geodesic distance between sphere embeddings, and a
popularity channel that grows with the difference of ball-embedding norms.
A learned weight gamma in (0, 1) mixes the two probabilities. All slope
parameters are kept positive through softplus and gamma through a logistic,
so the optimizer works on unconstrained raw values.

Plain-array functions here are the reference implementation used for
scoring and tests; the ``tape_*`` builders express the same formulas on a
gradient tape for training. The two routes are cross-checked in the test
suite rather than sharing code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tape as tp
from .manifold import ARCCOS_EPS, norm_diff, sphere_dist


def _softplus(x: float) -> float:
    return float(np.logaddexp(0.0, x))


def _sigmoid(x):
    x = np.asarray(x, dtype=float)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))


def _inv_softplus(y: float) -> float:
    if y <= 0.0:
        raise ValueError("softplus output must be positive")
    # log(expm1(y)), stable for large y
    return float(y + math.log(-math.expm1(-y)))


@dataclass
class MixtureParams:
    """Raw (unconstrained) decoder parameters.

    slope/bias pairs act inside the two logistic channels; ``gamma`` is the
    homophily mixture weight.
    """

    raw_slope_hom: float
    raw_bias_hom: float
    raw_slope_rank: float
    raw_bias_rank: float
    raw_gamma: float

    @property
    def slope_hom(self) -> float:
        return _softplus(self.raw_slope_hom)

    @property
    def bias_hom(self) -> float:
        return _softplus(self.raw_bias_hom)

    @property
    def slope_rank(self) -> float:
        return _softplus(self.raw_slope_rank)

    @property
    def bias_rank(self) -> float:
        return _softplus(self.raw_bias_rank)

    @property
    def gamma(self) -> float:
        return float(_sigmoid(self.raw_gamma))

    @classmethod
    def from_natural(cls, slope_hom, bias_hom, slope_rank, bias_rank, gamma):
        """Build raw parameters that map to the given constrained values."""
        if not 0.0 < gamma < 1.0:
            raise ValueError("gamma must lie strictly inside (0, 1)")
        return cls(
            raw_slope_hom=_inv_softplus(slope_hom),
            raw_bias_hom=_inv_softplus(bias_hom),
            raw_slope_rank=_inv_softplus(slope_rank),
            raw_bias_rank=_inv_softplus(bias_rank),
            raw_gamma=float(math.log(gamma / (1.0 - gamma))),
        )


def hom_distance(x, y, w_s: float, space: str = "S"):
    """Homophily-channel distance: sphere geodesic, or Euclidean for E."""
    if space == "S":
        return sphere_dist(x, y, w_s)
    if space == "E":
        return np.linalg.norm(np.asarray(x, float) - np.asarray(y, float), axis=-1)
    raise ValueError(f"unknown homophily space {space!r}")


def p_hom(params: MixtureParams, x, y, w_s: float, space: str = "S"):
    """Homophily link probability 1 / (1 + exp(slope * dist + bias))."""
    d = hom_distance(x, y, w_s, space)
    return _sigmoid(-(params.slope_hom * d + params.bias_hom))


def p_rank(params: MixtureParams, x, y):
    """Popularity link probability sigma(slope * |norm diff| + bias).

    The same norm-difference distance serves both the ball and the
    Euclidean rank variant, only the embedding constraints differ.
    """
    d = norm_diff(x, y)
    return _sigmoid(params.slope_rank * d + params.bias_rank)


def p_link(params: MixtureParams, xs, ys, xh, yh, w_s: float, hom_space="S", gamma=None):
    """Mixture probability gamma * p_hom + (1 - gamma) * p_rank.

    ``gamma`` overrides the learned weight (fixed-mixture ablations).
    """
    g = params.gamma if gamma is None else float(gamma)
    return g * p_hom(params, xs, ys, w_s, hom_space) + (1.0 - g) * p_rank(
        params, xh, yh
    )


def grad_p_link(params: MixtureParams, xs, ys, xh, yh, w_s: float):
    """Analytic gradients of the mixture probability (sphere/ball spaces).

    Returns a dict with entries for the four embeddings and the five raw
    scalars, each matching central finite differences. Subgradients: 0 for
    the clamped arccos outside its interval, 0 for the norm difference at
    equal norms, 0 for zero ball embeddings.
    """
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    xh = np.asarray(xh, float)
    yh = np.asarray(yh, float)
    g = params.gamma
    j, b = params.slope_hom, params.bias_hom
    c, dd = params.slope_rank, params.bias_rank

    lo, hi = -1.0 + ARCCOS_EPS, 1.0 - ARCCOS_EPS
    u_raw = np.sum(xs * ys, axis=-1) / (w_s * w_s)
    u = np.clip(u_raw, lo, hi)
    ds = np.arccos(u)
    ph = _sigmoid(-(j * ds + b))
    inside = ((u_raw > lo) & (u_raw < hi)).astype(float)
    # d p_hom / d ds = -j ph (1-ph); d ds / du = -1/sqrt(1-u^2)
    dph_du = j * ph * (1.0 - ph) / np.sqrt(1.0 - u * u) * inside
    coeff_s = (g * dph_du / (w_s * w_s))[..., None]

    rx = np.linalg.norm(xh, axis=-1)
    ry = np.linalg.norm(yh, axis=-1)
    dh = np.abs(rx - ry)
    sgn = np.sign(rx - ry)
    pr = _sigmoid(c * dh + dd)
    dpr_ddh = c * pr * (1.0 - pr)
    ux = np.where(rx[..., None] > 0.0, xh / np.where(rx[..., None] > 0, rx[..., None], 1.0), 0.0)
    uy = np.where(ry[..., None] > 0.0, yh / np.where(ry[..., None] > 0, ry[..., None], 1.0), 0.0)
    coeff_h = ((1.0 - g) * dpr_ddh * sgn)[..., None]

    ds_j = _sigmoid(params.raw_slope_hom)
    ds_b = _sigmoid(params.raw_bias_hom)
    ds_c = _sigmoid(params.raw_slope_rank)
    ds_d = _sigmoid(params.raw_bias_rank)
    return {
        "x_s": coeff_s * ys,
        "y_s": coeff_s * xs,
        "x_h": coeff_h * ux,
        "y_h": -coeff_h * uy,
        "raw_slope_hom": -g * ds * ph * (1.0 - ph) * ds_j,
        "raw_bias_hom": -g * ph * (1.0 - ph) * ds_b,
        "raw_slope_rank": (1.0 - g) * dh * pr * (1.0 - pr) * ds_c,
        "raw_bias_rank": (1.0 - g) * pr * (1.0 - pr) * ds_d,
        "raw_gamma": (ph - pr) * g * (1.0 - g),
    }


class MixtureVars:
    """Tape leaves for the raw decoder parameters plus derived quantities."""

    def __init__(self, t: tp.Tape, params: MixtureParams, gamma_fixed=None):
        self.raw_slope_hom = t.leaf(params.raw_slope_hom)
        self.raw_bias_hom = t.leaf(params.raw_bias_hom)
        self.raw_slope_rank = t.leaf(params.raw_slope_rank)
        self.raw_bias_rank = t.leaf(params.raw_bias_rank)
        self.slope_hom = tp.softplus(self.raw_slope_hom)
        self.bias_hom = tp.softplus(self.raw_bias_hom)
        self.slope_rank = tp.softplus(self.raw_slope_rank)
        self.bias_rank = tp.softplus(self.raw_bias_rank)
        if gamma_fixed is None:
            self.raw_gamma = t.leaf(params.raw_gamma)
            self.gamma = tp.logistic(self.raw_gamma)
        else:
            self.raw_gamma = None
            self.gamma = float(gamma_fixed)


def tape_hom_dist_matrix(zs, w_s: float, space: str = "S"):
    """All-pairs homophily distances as an (n, n) tape expression."""
    if space == "S":
        cos = tp.clamp(
            tp.matmul(zs, tp.transpose(zs)),
            (w_s * w_s) * (-1.0 + ARCCOS_EPS),
            (w_s * w_s) * (1.0 - ARCCOS_EPS),
        )
        return tp.arccos(cos * (1.0 / (w_s * w_s)))
    if space == "E":
        sq = tp.sum_(zs * zs, axis=-1, keepdims=True)
        cross = tp.matmul(zs, tp.transpose(zs))
        d2 = tp.clamp(sq - 2.0 * cross + tp.transpose(sq), 0.0, None)
        return tp.sqrt(d2 + 1e-30)
    raise ValueError(f"unknown homophily space {space!r}")


def tape_rank_dist_matrix(zh):
    """All-pairs norm-difference distances as an (n, n) tape expression."""
    r = tp.norm(zh, axis=-1, keepdims=True)
    return tp.absval(r - tp.transpose(r))


def tape_link_matrix(mix: MixtureVars, zs, zh, w_s: float, hom_space="S"):
    """All-pairs mixture probabilities on the tape."""
    ds = tape_hom_dist_matrix(zs, w_s, hom_space)
    dh = tape_rank_dist_matrix(zh)
    ph = tp.logistic(-(mix.slope_hom * ds + mix.bias_hom))
    pr = tp.logistic(mix.slope_rank * dh + mix.bias_rank)
    return mix.gamma * ph + (1.0 - mix.gamma) * pr


def tape_hom_dist_pairs(zs_i, zs_j, w_s: float, space: str = "S"):
    """Batched homophily distances for gathered embedding rows."""
    if space == "S":
        cos = tp.clamp(
            tp.sum_(zs_i * zs_j, axis=-1),
            (w_s * w_s) * (-1.0 + ARCCOS_EPS),
            (w_s * w_s) * (1.0 - ARCCOS_EPS),
        )
        return tp.arccos(cos * (1.0 / (w_s * w_s)))
    if space == "E":
        return tp.norm(zs_i - zs_j, axis=-1)
    raise ValueError(f"unknown homophily space {space!r}")


def tape_link_pairs(mix: MixtureVars, zs_i, zs_j, zh_i, zh_j, w_s, hom_space="S"):
    """Batched mixture probabilities for gathered embedding rows."""
    ds = tape_hom_dist_pairs(zs_i, zs_j, w_s, hom_space)
    dh = tp.absval(tp.norm(zh_i, axis=-1) - tp.norm(zh_j, axis=-1))
    ph = tp.logistic(-(mix.slope_hom * ds + mix.bias_hom))
    pr = tp.logistic(mix.slope_rank * dh + mix.bias_rank)
    return mix.gamma * ph + (1.0 - mix.gamma) * pr
