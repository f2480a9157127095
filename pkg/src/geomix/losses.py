"""Training objectives.

Each space minimizes reconstruction + its own prior KL + the unification
penalty; the reconstruction and unification terms are shared tape nodes so
both losses see identical values. Two reconstruction readings coexist: the
reported quantity is the mean binary log-likelihood over ordered node
pairs (exact dense sum for small graphs, an importance-weighted sample
estimate above ``k_dense``), while the trainer optimizes the class-balanced
form where edges and sampled non-edges contribute equal halves. Sparse
graphs make the plain pair mean vanish into the non-edge mass (per-node
gradients shrink like 1/n), so the balanced form is what keeps step sizes
in a workable range. The KL terms default to the map reading (mean
negative log prior density, normalizers kept so scale parameters get
gradients); a Monte-Carlo mode with a wrapped point-mass-plus-jitter
proposal sits behind the config flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geo_ops
from . import tape as tp
from .manifold import project_to_sphere, sphere_dist
from .priors import (
    log_radial_normalizer,
    log_radial_normalizer_dzeta,
    unit_ball_volume,
)

_P_FLOOR = 1e-12

# The learned dispersion is floored: the map-mode KL is unbounded below as
# dispersion and radii shrink together, so an unfloored zeta spirals to a
# point mass at the center and kills the radial structure.
ZETA_FLOOR = 0.25


@dataclass
class LossConfig:
    lambda_a: float = 64.0
    kl_mode: str = "map"  # "map" | "montecarlo"
    mc_jitter: float = 1e-2
    k_dense: int = 2000
    neg_ratio: float = 1.0
    unify: bool = True


def tape_log_radial_norm(disp, dim: int):
    """log Z_radial(dispersion) as a tape primitive with exact derivative."""
    if not isinstance(disp, tp.Var):
        return log_radial_normalizer(dim, float(disp))
    z = float(disp.value)
    val = log_radial_normalizer(dim, z)
    dz = log_radial_normalizer_dzeta(dim, z)
    return disp.tape.record(
        "log_radial_norm", np.asarray(val), (disp,), lambda g: (g * dz,)
    )


def recon_loglik_dense(p, adj: np.ndarray, pair_mask: np.ndarray | None = None):
    """Mean log-likelihood over ordered pairs from an all-pairs matrix.

    ``adj`` is the binary training adjacency; ``pair_mask`` optionally
    restricts the supervised pairs (inductive training). Diagonal entries
    never count.
    """
    n = adj.shape[0]
    mask = np.ones((n, n)) if pair_mask is None else np.asarray(pair_mask, float)
    mask = mask * (1.0 - np.eye(n))
    pos = mask * (adj > 0.0)
    neg = mask * (adj <= 0.0)
    lp = tp.log(tp.clamp(p, _P_FLOOR, None))
    ln = tp.log(tp.clamp(1.0 - p, _P_FLOOR, None))
    total = tp.sum_(pos * lp) + tp.sum_(neg * ln)
    return total / float(mask.sum())


def recon_loglik_balanced_dense(
    p,
    adj: np.ndarray,
    pair_mask: np.ndarray | None = None,
    neg_ratio: float = 1.0,
):
    """Class-reweighted log-likelihood from an all-pairs matrix.

    Edges and non-edges contribute with weight 1 : neg_ratio regardless of
    graph density; this is the exact expectation of the edge-batch
    objective with neg_ratio negatives per edge. An empty class
    contributes zero.
    """
    n = adj.shape[0]
    mask = np.ones((n, n)) if pair_mask is None else np.asarray(pair_mask, float)
    mask = mask * (1.0 - np.eye(n))
    pos = mask * (adj > 0.0)
    neg = mask * (adj <= 0.0)
    lp = tp.log(tp.clamp(p, _P_FLOOR, None))
    ln = tp.log(tp.clamp(1.0 - p, _P_FLOOR, None))
    half_p = tp.sum_(pos * lp) / max(float(pos.sum()), 1.0)
    half_n = tp.sum_(neg * ln) / max(float(neg.sum()), 1.0)
    w = 1.0 / (1.0 + neg_ratio)
    return w * half_p + (1.0 - w) * half_n


def recon_loglik_balanced_sampled(p_pos, p_neg):
    """Mean log-likelihood over an edge batch plus its negative samples.

    A plain mean over the union, so the positive:negative weighting is the
    batch's own count ratio.
    """
    n_pos = p_pos.value.size if isinstance(p_pos, tp.Var) else np.asarray(p_pos).size
    n_neg = p_neg.value.size if isinstance(p_neg, tp.Var) else np.asarray(p_neg).size
    lp = tp.sum_(tp.log(tp.clamp(p_pos, _P_FLOOR, None)))
    ln = tp.sum_(tp.log(tp.clamp(1.0 - p_neg, _P_FLOOR, None)))
    return (lp + ln) / float(n_pos + n_neg)


def recon_loglik_sampled(p_pos, p_neg, n_nodes: int, n_edges: int):
    """Unbiased estimate of the dense mean from sampled pairs.

    Positive and negative terms are importance-weighted by the inverse
    sampling fractions so the expectation over resamplings equals the
    dense ordered-pair mean.
    """
    k = n_nodes
    n_nonedges = k * (k - 1) // 2 - n_edges
    n_pos = int(np.prod(p_pos.shape)) if not isinstance(p_pos, tp.Var) else p_pos.value.size
    n_neg = int(np.prod(p_neg.shape)) if not isinstance(p_neg, tp.Var) else p_neg.value.size
    lp = tp.sum_(tp.log(tp.clamp(p_pos, _P_FLOOR, None)))
    ln = tp.sum_(tp.log(tp.clamp(1.0 - p_neg, _P_FLOOR, None)))
    scale = 2.0 / (k * (k - 1))
    return scale * ((n_edges / n_pos) * lp + (n_nonedges / n_neg) * ln)


def kl_sphere(
    zs,
    direction,
    raw_concentration,
    raw_amplitude,
    w_s: float,
    mode: str = "map",
    rng: np.random.Generator | None = None,
    jitter: float = 1e-2,
):
    """Mean negative log density under the sphere lobe prior (map mode).

    Monte-Carlo mode perturbs each point with tangent jitter and adds the
    proposal's log density (a constant), giving a single-sample
    log q - log p estimate.
    """
    amp = tp.softplus(raw_amplitude)
    conc = tp.softplus(raw_concentration)
    const = 0.0
    if mode == "montecarlo":
        if rng is None:
            raise ValueError("montecarlo mode needs an rng")
        v = geo_ops.sphere_log0(zs, w_s)
        eps = rng.standard_normal(v.value.shape if isinstance(v, tp.Var) else v.shape)
        zs = geo_ops.sphere_exp0(v + jitter * eps, w_s)
        dim = eps.shape[-1]
        const = float(
            np.mean(-0.5 * np.sum(eps * eps, axis=-1))
            - dim * math.log(jitter * math.sqrt(2.0 * math.pi))
        )
    elif mode != "map":
        raise ValueError(f"unknown kl mode {mode!r}")
    align = tp.matmul(zs, direction) * (1.0 / w_s)
    mean_term = tp.mean(conc * (align - 1.0))
    return const - tp.log(amp) - mean_term


def kl_ball(
    zh,
    raw_dispersion,
    center: np.ndarray,
    dim: int,
    mode: str = "map",
    rng: np.random.Generator | None = None,
    jitter: float = 1e-2,
):
    """Mean negative log density under the ball geodesic Gaussian."""
    disp = ZETA_FLOOR + tp.softplus(raw_dispersion)
    const = 0.0
    if mode == "montecarlo":
        if rng is None:
            raise ValueError("montecarlo mode needs an rng")
        v = geo_ops.ball_log0(zh)
        eps = rng.standard_normal(v.value.shape if isinstance(v, tp.Var) else v.shape)
        zh = geo_ops.ball_exp0(v + jitter * eps)
        width = eps.shape[-1]
        const = float(
            np.mean(-0.5 * np.sum(eps * eps, axis=-1))
            - width * math.log(jitter * math.sqrt(2.0 * math.pi))
        )
    elif mode != "map":
        raise ValueError(f"unknown kl mode {mode!r}")
    d2 = geo_ops.poincare_dist_sq(zh, center)
    log_angular = math.log(unit_ball_volume(dim))
    return (
        const
        + log_angular
        + tape_log_radial_norm(disp, dim)
        + tp.mean(d2) / (2.0 * disp * disp)
    )


def unify_loss(zh, zs, w_s: float, dim: int):
    """Mean sphere distance between the truncated-ball projection and zs."""
    x = tp.take_cols(zh, np.arange(dim))
    proj = geo_ops.project_sphere(x, w_s)
    cos = tp.clamp(
        tp.sum_(proj * zs, axis=-1),
        (w_s * w_s) * (-1.0 + 1e-12),
        (w_s * w_s) * (1.0 - 1e-12),
    )
    return tp.mean(tp.arccos(cos * (1.0 / (w_s * w_s))))


def unify_misalignment(zh: np.ndarray, zs: np.ndarray, w_s: float) -> float:
    """Reference (plain numpy) radial misalignment used for reporting."""
    zh = np.asarray(zh, float)
    zs = np.asarray(zs, float)
    d = zs.shape[1]
    x = zh[:, :d]
    proj = project_to_sphere(x, w_s)
    return float(np.mean(sphere_dist(proj, zs, w_s)))


def total_losses(recon_ll, kl_s, kl_h, uni, lambda_a: float):
    """Assemble the per-space losses around the shared terms.

    Disabled components are passed as plain 0.0 and drop out of the sums.
    Returns (spherical loss, hyperbolic loss).
    """
    recon_term = (-lambda_a) * recon_ll
    l_s = recon_term + kl_s + uni
    l_h = recon_term + kl_h + uni
    return l_s, l_h
