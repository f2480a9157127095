"""Synthetic graph generators for experiments and calibration.

Three structural generators (class-homophily partition, preferential
attachment, and their mixture) plus a model-based generator that samples
embeddings from the priors and wires edges through the exact link
probabilities, returning the ground truth alongside the graph.
"""

from __future__ import annotations

import numpy as np

from .decoder import MixtureParams, p_link
from .graphio import Graph, graph_from_edges
from .manifold import clamp_to_ball
from .priors import SphericalPrior, sample_ball_radii, sample_sphere


def gen_homophily(
    n: int,
    clusters: int = 4,
    p_in: float = 0.12,
    p_out: float = 0.002,
    seed: int = 0,
) -> Graph:
    """Planted-partition graph; nodes carry one-hot cluster labels."""
    if n < 0 or clusters < 1:
        raise ValueError("need nonnegative n and at least one cluster")
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, clusters, size=n)
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(labels[iu] == labels[ju], p_in, p_out)
    keep = rng.random(prob.size) < prob
    pairs = np.stack([iu[keep], ju[keep]], axis=1)
    g = graph_from_edges([(int(u), int(v)) for u, v in pairs], n=n)
    onehot = np.zeros((n, clusters), dtype=np.int8)
    onehot[np.arange(n), labels] = 1
    g.labels = onehot
    return g


def gen_influence(n: int, attach_m: int = 3, seed: int = 0) -> Graph:
    """Preferential attachment: node v joins with min(v, attach_m) edges.

    Targets are drawn proportionally to degree (every endpoint is repeated
    into the pool once per incident edge, with one bootstrap entry for the
    first node), so attach_m = 1 yields a uniform random recursive tree
    skewed toward early hubs: n - 1 edges, connected, acyclic.
    """
    if n < 2:
        return graph_from_edges([], n=max(n, 0))
    m = max(1, int(attach_m))
    rng = np.random.default_rng(seed)
    pool = [0]
    edges: list[tuple[int, int]] = []
    for v in range(1, n):
        want = min(v, m)
        chosen: set[int] = set()
        guard = 0
        while len(chosen) < want:
            u = int(pool[rng.integers(len(pool))])
            guard += 1
            if guard > 10**6:
                raise RuntimeError("attachment sampling stalled")
            if u != v:
                chosen.add(u)
        for u in sorted(chosen):
            edges.append((u, v))
            pool.append(u)
            pool.append(v)
    return graph_from_edges(edges, n=n)


def gen_mixed(
    n: int,
    mix: float = 0.5,
    seed: int = 0,
    clusters: int = 4,
    p_in: float = 0.12,
    p_out: float = 0.002,
    attach_m: int = 3,
) -> Graph:
    """Overlay of the two structural generators.

    Each homophily edge survives with probability ``mix`` and each
    attachment edge with probability ``1 - mix``; the survivors are merged
    into one graph, so mix = 1 is exactly the homophily edge set and mix =
    0 exactly the attachment edge set. Cluster labels come from the
    homophily side.
    """
    if not 0.0 <= mix <= 1.0:
        raise ValueError("mix must lie in [0, 1]")
    hom = gen_homophily(n, clusters, p_in, p_out, seed)
    inf = gen_influence(n, attach_m, seed + 1)
    rng = np.random.default_rng(seed + 2)
    keep_h = rng.random(hom.m) < mix
    keep_i = rng.random(inf.m) < (1.0 - mix)
    edges = [
        (int(u), int(v))
        for u, v in zip(hom.src[keep_h], hom.dst[keep_h])
    ]
    edges += [
        (int(u), int(v))
        for u, v in zip(inf.src[keep_i], inf.dst[keep_i])
    ]
    g = graph_from_edges(edges, n=n)
    g.labels = hom.labels
    return g


def gen_from_model(
    n: int = 300,
    dim: int = 4,
    w_s: float = 0.5,
    seed: int = 0,
    gamma: float = 0.75,
    concentration: float = 4.0,
    dispersion: float = 0.7,
    slope_hom: float = 4.0,
    bias_hom: float = 0.5,
    slope_rank: float = 12.0,
    bias_rank: float = 0.2,
    alignment_frac: float = 1.0,
) -> tuple[Graph, dict]:
    """Sample embeddings from the priors and edges from the exact mixture.

    ``alignment_frac`` of the nodes reuse their sphere direction (zero
    padded) as the ball direction, so the radial projections of the two
    embeddings agree for those nodes (default: all of them). Returns the
    graph plus a truth dict with the embeddings, the parameters, and the
    full probability table.
    """
    rng = np.random.default_rng(seed)
    params = MixtureParams.from_natural(slope_hom, bias_hom, slope_rank, bias_rank, gamma)
    direction = np.zeros(dim)
    direction[0] = 1.0
    prior = SphericalPrior(direction=direction, concentration=concentration)
    z_s = sample_sphere(prior, n, w_s, rng)

    radii = sample_ball_radii(dim, dispersion, n, rng)
    rho = np.tanh(radii / 2.0)
    dirs = rng.standard_normal((n, dim + 1))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    aligned = rng.random(n) < alignment_frac
    dirs[aligned, :dim] = z_s[aligned] / w_s
    dirs[aligned, dim] = 0.0
    z_h = clamp_to_ball(rho[:, None] * dirs)

    p = np.zeros((n, n))
    for i in range(n):
        p[i] = p_link(
            params,
            z_s[i][None, :], z_s,
            z_h[i][None, :], z_h,
            w_s, "S",
        )
    np.fill_diagonal(p, 0.0)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < p[iu, ju]
    g = graph_from_edges(
        [(int(u), int(v)) for u, v in zip(iu[keep], ju[keep])], n=n
    )
    truth = {"z_s": z_s, "z_h": z_h, "p": p, "params": params, "w_s": w_s}
    return g, truth
