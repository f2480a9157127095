"""Model state, the training loop, and model persistence.

Two training modes share every loss and decoder path: "nmm" optimizes free
per-node embeddings with Riemannian steps, "nmm-gnn" optimizes the encoder
weights that produce the embeddings. Scalar parameters always take plain
gradient steps on their raw forms; the spherical side of the model updates
from the spherical loss, the influence side from the hyperbolic loss, and
the mixture weight from their sum. Early stopping tracks validation AUC
and the best snapshot is what gets returned.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from . import metrics
from . import tape as tp
from .decoder import MixtureParams, MixtureVars, p_link, tape_link_matrix, tape_link_pairs
from .encoder import EncoderConfig, encode, init_layer_weights, init_node_points, normalized_adjacency
from .graphio import Graph, Split, sample_non_edges
from .losses import (
    ZETA_FLOOR,
    LossConfig,
    kl_ball,
    kl_sphere,
    recon_loglik_balanced_dense,
    recon_loglik_balanced_sampled,
    recon_loglik_dense,
    recon_loglik_sampled,
    total_losses,
    unify_loss,
)
from .optimizer import OptimConfig, rsgd_ball_step, rsgd_sphere_step, sgd_step


@dataclass
class ModelState:
    """Everything needed to score pairs and to resume or transfer encoding."""

    mode: str
    hom_space: str
    rank_space: str
    dim: int
    w_s: float
    n: int
    seed: int
    params: MixtureParams
    prior_direction: np.ndarray
    raw_concentration: float
    raw_amplitude: float
    raw_dispersion: float
    unify: bool
    gamma_fixed: float | None
    z_s: np.ndarray
    z_h: np.ndarray
    weights_s: list | None = None
    weights_h: list | None = None
    init_s: np.ndarray | None = None
    init_h: np.ndarray | None = None
    final_softmax: bool = True

    def clone(self) -> "ModelState":
        c = ModelState(**self.__dict__)
        c.params = MixtureParams(**self.params.__dict__)
        c.prior_direction = self.prior_direction.copy()
        c.z_s = self.z_s.copy()
        c.z_h = self.z_h.copy()
        if self.weights_s is not None:
            c.weights_s = [w.copy() for w in self.weights_s]
            c.weights_h = [w.copy() for w in self.weights_h]
        return c

    def encoder_cfg(self, space_side: str) -> EncoderConfig:
        width = self.dim if space_side == "hom" else self.dim + 1
        return EncoderConfig(dims=[width, width, width], final_softmax=self.final_softmax)


def _softplus_inv(y: float) -> float:
    return float(y + np.log(-np.expm1(-y)))


def init_model(
    graph: Graph,
    *,
    mode: str = "nmm",
    dim: int = 8,
    w_s: float = 0.5,
    seed: int = 0,
    hom_space: str = "S",
    rank_space: str = "H",
    unify: bool = True,
    gamma_fixed: float | None = None,
    final_softmax: bool = True,
) -> ModelState:
    """Seeded initialization of embeddings, weights, and scalars."""
    if mode not in ("nmm", "nmm-gnn"):
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(seed)
    if hom_space == "S":
        z_s, _ = init_node_points(graph.n, dim, w_s, rng, graph.features)
    else:
        z_s = rng.random((graph.n, dim))
        _ = rng.random((graph.n, dim + 1))
    rng2 = np.random.default_rng(seed)
    _, z_h = init_node_points(graph.n, dim, w_s, rng2, graph.features)
    # dispersion starts at the stationary point of its own loss given the
    # initial radii; anywhere else the first steps on zeta are violent
    r2 = np.mean((2.0 * np.arctanh(np.linalg.norm(z_h, axis=1))) ** 2)
    zeta0 = float(np.clip(np.sqrt(r2 / (dim + 1)), ZETA_FLOOR + 0.05, 2.0))
    state = ModelState(
        mode=mode,
        hom_space=hom_space,
        rank_space=rank_space,
        dim=dim,
        w_s=w_s,
        n=graph.n,
        seed=seed,
        params=MixtureParams.from_natural(1.0, 1.0, 1.0, 1.0, 0.5),
        prior_direction=np.eye(dim)[0].copy(),
        raw_concentration=_softplus_inv(1.0),
        raw_amplitude=_softplus_inv(1.0),
        raw_dispersion=_softplus_inv(zeta0 - ZETA_FLOOR),
        unify=unify,
        gamma_fixed=gamma_fixed,
        z_s=z_s,
        z_h=z_h,
        final_softmax=final_softmax,
    )
    if mode == "nmm-gnn":
        wrng = np.random.default_rng(seed + 1)
        state.weights_s = init_layer_weights(state.encoder_cfg("hom").dims, wrng)
        state.weights_h = init_layer_weights(state.encoder_cfg("rank").dims, wrng)
        state.init_s = z_s.copy()
        state.init_h = z_h.copy()
    return state


def score_pairs(state: ModelState, pairs: np.ndarray) -> np.ndarray:
    """Mixture link probabilities for an (m, 2) array of node pairs."""
    pairs = np.asarray(pairs, dtype=int)
    if pairs.size == 0:
        return np.zeros(0)
    i, j = pairs[:, 0], pairs[:, 1]
    return p_link(
        state.params,
        state.z_s[i],
        state.z_s[j],
        state.z_h[i],
        state.z_h[j],
        state.w_s,
        state.hom_space,
        gamma=state.gamma_fixed,
    )


def encode_with_weights(state: ModelState, a_hat: np.ndarray, init_s, init_h):
    """Forward-only encoding of given initial features (arrays in/out)."""
    zs = encode(a_hat, init_s, state.weights_s, state.encoder_cfg("hom"), state.hom_space, state.w_s)
    zh = encode(a_hat, init_h, state.weights_h, state.encoder_cfg("rank"), state.rank_space, state.w_s)
    return zs, zh


class _Leaves:
    """All tape leaves for one training step."""

    def __init__(self, t: tp.Tape, state: ModelState, a_hat):
        self.mix = MixtureVars(t, state.params, state.gamma_fixed)
        self.direction = t.leaf(state.prior_direction)
        self.raw_conc = t.leaf(state.raw_concentration)
        self.raw_amp = t.leaf(state.raw_amplitude)
        self.raw_disp = t.leaf(state.raw_dispersion)
        if state.mode == "nmm":
            self.z_s = t.leaf(state.z_s)
            self.z_h = t.leaf(state.z_h)
            self.w_list_s = None
            self.w_list_h = None
            self.zs_out = self.z_s
            self.zh_out = self.z_h
        else:
            self.z_s = None
            self.z_h = None
            self.w_list_s = [t.leaf(w) for w in state.weights_s]
            self.w_list_h = [t.leaf(w) for w in state.weights_h]
            self.zs_out = encode(
                a_hat, state.init_s, self.w_list_s,
                state.encoder_cfg("hom"), state.hom_space, state.w_s,
            )
            self.zh_out = encode(
                a_hat, state.init_h, self.w_list_h,
                state.encoder_cfg("rank"), state.rank_space, state.w_s,
            )


def _grad(v):
    return None if v is None or v.grad is None else v.grad


def train(
    graph: Graph,
    split: Split,
    state: ModelState,
    opt: OptimConfig | None = None,
    loss_cfg: LossConfig | None = None,
    pair_mask: np.ndarray | None = None,
):
    """Optimize ``state`` in place; returns (best state, loss trace).

    The trace carries one record per epoch: losses from the epoch's forward
    passes and validation AUC measured after its updates.
    """
    opt = opt or OptimConfig()
    loss_cfg = loss_cfg or LossConfig()
    rng = np.random.default_rng(state.seed + 7919)
    n = graph.n
    train_src, train_dst, train_w = split.train_src, split.train_dst, split.train_weight
    n_train_edges = train_src.size

    a_hat = None
    if state.mode == "nmm-gnn":
        a_hat = normalized_adjacency(n, train_src, train_dst, train_w)

    dense = opt.batch_edges is None and n <= min(loss_cfg.k_dense, opt.dense_max_nodes)
    adj_train = None
    train_keys: set[int] | None = None
    if dense:
        adj_train = np.zeros((n, n))
        adj_train[train_src, train_dst] = 1.0
        adj_train[train_dst, train_src] = 1.0
    else:
        a = np.minimum(train_src, train_dst)
        b = np.maximum(train_src, train_dst)
        train_keys = set((a * n + b).tolist())

    train_graph_view = Graph(
        n=n,
        src=train_src,
        dst=train_dst,
        weight=train_w,
        orig_ids=graph.orig_ids,
    )

    def build_losses(t: tp.Tape, leaves: _Leaves, pos_pairs=None, neg_pairs=None):
        zs, zh = leaves.zs_out, leaves.zh_out
        if pos_pairs is None:
            p = tape_link_matrix(leaves.mix, zs, zh, state.w_s, state.hom_space)
            recon = recon_loglik_balanced_dense(
                p, adj_train, pair_mask, loss_cfg.neg_ratio
            )
        else:
            pi, pj = pos_pairs[:, 0], pos_pairs[:, 1]
            ni, nj = neg_pairs[:, 0], neg_pairs[:, 1]
            p_pos = tape_link_pairs(
                leaves.mix,
                tp.gather_rows(zs, pi), tp.gather_rows(zs, pj),
                tp.gather_rows(zh, pi), tp.gather_rows(zh, pj),
                state.w_s, state.hom_space,
            )
            p_neg = tape_link_pairs(
                leaves.mix,
                tp.gather_rows(zs, ni), tp.gather_rows(zs, nj),
                tp.gather_rows(zh, ni), tp.gather_rows(zh, nj),
                state.w_s, state.hom_space,
            )
            recon = recon_loglik_balanced_sampled(p_pos, p_neg)
        kl_s = 0.0
        kl_h = 0.0
        uni = 0.0
        if state.hom_space == "S":
            kl_s = kl_sphere(
                zs, leaves.direction, leaves.raw_conc, leaves.raw_amp,
                state.w_s, loss_cfg.kl_mode, rng, loss_cfg.mc_jitter,
            )
        if state.rank_space == "H":
            kl_h = kl_ball(
                zh, leaves.raw_disp, np.zeros(state.dim + 1), state.dim,
                loss_cfg.kl_mode, rng, loss_cfg.mc_jitter,
            )
        if state.unify and state.hom_space == "S":
            uni = unify_loss(zh, zs, state.w_s, state.dim)
        l_s, l_h = total_losses(recon, kl_s, kl_h, uni, loss_cfg.lambda_a)
        parts = {
            "recon": float(recon.value),
            "unify": float(uni.value) if isinstance(uni, tp.Var) else 0.0,
            "kl_s": float(kl_s.value) if isinstance(kl_s, tp.Var) else 0.0,
            "kl_h": float(kl_h.value) if isinstance(kl_h, tp.Var) else 0.0,
        }
        return l_s, l_h, parts

    def apply_updates(t: tp.Tape, leaves: _Leaves, l_s, l_h):
        eta = opt.eta
        eta_s = opt.eta * opt.scalar_eta_factor

        def _fc(g):
            if g is None:
                return None
            return float(np.clip(float(g), -opt.grad_clip, opt.grad_clip))

        t.backward(l_s)
        if state.mode == "nmm":
            g_zs = _grad(leaves.z_s)
        else:
            g_ws = [_grad(w) for w in leaves.w_list_s]
        g_sh = _grad(leaves.mix.raw_slope_hom)
        g_bh = _grad(leaves.mix.raw_bias_hom)
        g_dir = _grad(leaves.direction)
        g_conc = _grad(leaves.raw_conc)
        g_amp = _grad(leaves.raw_amp)
        g_gamma = _grad(leaves.mix.raw_gamma) if leaves.mix.raw_gamma is not None else None
        t.zero_grads()
        t.backward(l_h)
        if state.mode == "nmm":
            g_zh = _grad(leaves.z_h)
        else:
            g_wh = [_grad(w) for w in leaves.w_list_h]
        g_sr = _grad(leaves.mix.raw_slope_rank)
        g_br = _grad(leaves.mix.raw_bias_rank)
        g_disp = _grad(leaves.raw_disp)
        if leaves.mix.raw_gamma is not None:
            g2 = _grad(leaves.mix.raw_gamma)
            if g_gamma is None:
                g_gamma = g2
            elif g2 is not None:
                g_gamma = g_gamma + g2

        if state.mode == "nmm":
            if g_zs is not None:
                if state.hom_space == "S":
                    state.z_s = rsgd_sphere_step(
                        state.z_s, g_zs, eta, state.w_s, opt.rsgd_prefactor
                    )
                else:
                    state.z_s = sgd_step(state.z_s, g_zs, eta)
            if g_zh is not None:
                if state.rank_space == "H":
                    state.z_h = rsgd_ball_step(state.z_h, g_zh, eta)
                else:
                    state.z_h = sgd_step(state.z_h, g_zh, eta)
        else:
            state.weights_s = [sgd_step(w, g, eta) for w, g in zip(state.weights_s, g_ws)]
            state.weights_h = [sgd_step(w, g, eta) for w, g in zip(state.weights_h, g_wh)]

        p = state.params
        state.params = MixtureParams(
            raw_slope_hom=float(sgd_step(p.raw_slope_hom, _fc(g_sh), eta_s)),
            raw_bias_hom=float(sgd_step(p.raw_bias_hom, _fc(g_bh), eta_s)),
            raw_slope_rank=float(sgd_step(p.raw_slope_rank, _fc(g_sr), eta_s)),
            raw_bias_rank=float(sgd_step(p.raw_bias_rank, _fc(g_br), eta_s)),
            raw_gamma=float(sgd_step(p.raw_gamma, _fc(g_gamma), eta_s)),
        )
        if g_dir is not None:
            d = state.prior_direction - eta * g_dir
            nd = np.linalg.norm(d)
            state.prior_direction = d / nd if nd > 0 else state.prior_direction
        state.raw_concentration = float(sgd_step(state.raw_concentration, _fc(g_conc), eta_s))
        state.raw_amplitude = float(sgd_step(state.raw_amplitude, _fc(g_amp), eta_s))
        state.raw_dispersion = float(sgd_step(state.raw_dispersion, _fc(g_disp), eta_s))

    def refresh_embeddings():
        if state.mode == "nmm-gnn":
            zs, zh = encode_with_weights(state, a_hat, state.init_s, state.init_h)
            state.z_s, state.z_h = zs, zh

    def check_scalars(epoch: int):
        p = state.params
        scalars = [
            p.raw_slope_hom, p.raw_bias_hom, p.raw_slope_rank, p.raw_bias_rank,
            p.raw_gamma, state.raw_concentration, state.raw_amplitude,
            state.raw_dispersion,
        ]
        # raw magnitudes beyond ~1e4 are always runaway steps: converged
        # raw parameters live in single digits, and the softplus/logistic
        # reparams saturate long before that
        bad = not all(np.isfinite(scalars)) or max(abs(v) for v in scalars) > 1e4
        if bad:
            raise tp.TapeError(
                f"parameters diverged at epoch {epoch}; "
                f"try a smaller step size (eta={opt.eta})"
            )

    val_pos, val_neg = split.val_pos, split.val_neg
    has_val = val_pos.shape[0] > 0
    trace: list[dict] = []
    best_auc = -np.inf
    best_state = None
    best_epoch = -1

    for epoch in range(opt.epochs):
        if dense:
            batches = [None]
        else:
            order = rng.permutation(n_train_edges)
            size = opt.batch_edges or n_train_edges
            batches = [order[i : i + size] for i in range(0, n_train_edges, size)]
        ls_acc, lh_acc, uni_acc = [], [], []
        for batch in batches:
            t = tp.Tape()
            leaves = _Leaves(t, state, a_hat)
            if batch is None:
                l_s, l_h, parts = build_losses(t, leaves)
            else:
                pos = np.stack([train_src[batch], train_dst[batch]], axis=1)
                n_neg = max(1, int(round(loss_cfg.neg_ratio * batch.size)))
                neg = sample_non_edges(train_graph_view, n_neg, rng)
                l_s, l_h, parts = build_losses(t, leaves, pos, neg)
            ls_val, lh_val = float(l_s.value), float(l_h.value)
            if not (np.isfinite(ls_val) and np.isfinite(lh_val)):
                raise tp.TapeError(
                    f"non-finite loss at epoch {epoch}; "
                    f"try a smaller step size (eta={opt.eta})"
                )
            apply_updates(t, leaves, l_s, l_h)
            check_scalars(epoch)
            ls_acc.append(ls_val)
            lh_acc.append(lh_val)
            uni_acc.append(parts["unify"])
        refresh_embeddings()
        if has_val:
            val_auc = metrics.auc(
                score_pairs(state, val_pos), score_pairs(state, val_neg)
            )
        else:
            val_auc = float("nan")
        trace.append(
            {
                "epoch": epoch,
                "l_s": float(np.mean(ls_acc)),
                "l_h": float(np.mean(lh_acc)),
                "unify": float(np.mean(uni_acc)),
                "val_auc": val_auc,
            }
        )
        if has_val and epoch + 1 >= opt.min_epochs:
            # ties keep the later snapshot: the validation set is small, so
            # its AUC is coarse and the max is revisited many times
            if val_auc >= best_auc:
                best_auc = val_auc
                best_state = state.clone()
                best_epoch = epoch
            elif epoch - best_epoch >= opt.patience:
                break

    if best_state is not None:
        for k, v in best_state.__dict__.items():
            setattr(state, k, v)
    return state, trace


def _f(g):
    return None if g is None else float(g)


def link_matrix(state: ModelState) -> np.ndarray:
    """All-pairs mixture probabilities, row by row (no tape, no n^2 x d blowup)."""
    n = state.n
    out = np.empty((n, n))
    for i in range(n):
        out[i] = p_link(
            state.params,
            state.z_s[i][None, :], state.z_s,
            state.z_h[i][None, :], state.z_h,
            state.w_s, state.hom_space,
            gamma=state.gamma_fixed,
        )
    return out


def compute_losses(
    state: ModelState,
    src: np.ndarray,
    dst: np.ndarray,
    loss_cfg: LossConfig | None = None,
    rng: np.random.Generator | None = None,
    pair_mask: np.ndarray | None = None,
) -> dict:
    """Loss components on given edges with the current embeddings (no tape)."""
    loss_cfg = loss_cfg or LossConfig()
    n = state.n
    if n <= loss_cfg.k_dense:
        p = link_matrix(state)
        adj = np.zeros((n, n))
        adj[src, dst] = 1.0
        adj[dst, src] = 1.0
        recon = float(recon_loglik_dense(p, adj, pair_mask))
    else:
        rng = rng or np.random.default_rng(state.seed + 104729)
        gview = Graph(
            n=n, src=src, dst=dst,
            weight=np.ones(src.size), orig_ids=[str(i) for i in range(n)],
        )
        pos = np.stack([src, dst], axis=1)
        neg = sample_non_edges(gview, pos.shape[0], rng)
        recon = float(
            recon_loglik_sampled(score_pairs(state, pos), score_pairs(state, neg), n, src.size)
        )
    kl_s = 0.0
    kl_h = 0.0
    uni = 0.0
    if state.hom_space == "S":
        kl_s = float(
            kl_sphere(
                state.z_s, state.prior_direction,
                state.raw_concentration, state.raw_amplitude, state.w_s,
            )
        )
    if state.rank_space == "H":
        kl_h = float(
            kl_ball(
                state.z_h, state.raw_dispersion,
                np.zeros(state.dim + 1), state.dim,
            )
        )
    if state.unify and state.hom_space == "S":
        uni = float(unify_loss(state.z_h, state.z_s, state.w_s, state.dim))
    return {"recon": recon, "kl_s": kl_s, "kl_h": kl_h, "unify": uni}


def save_model(state: ModelState, out_dir: str, orig_ids: list[str]) -> None:
    """Write model.json plus the embeddings CSV into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    doc = {
        "mode": state.mode,
        "hom_space": state.hom_space,
        "rank_space": state.rank_space,
        "dim": state.dim,
        "w_s": state.w_s,
        "n": state.n,
        "seed": state.seed,
        "params": state.params.__dict__,
        "prior_direction": state.prior_direction.tolist(),
        "raw_concentration": state.raw_concentration,
        "raw_amplitude": state.raw_amplitude,
        "raw_dispersion": state.raw_dispersion,
        "unify": state.unify,
        "gamma_fixed": state.gamma_fixed,
        "final_softmax": state.final_softmax,
        "weights_s": None if state.weights_s is None else [w.tolist() for w in state.weights_s],
        "weights_h": None if state.weights_h is None else [w.tolist() for w in state.weights_h],
        "init_s": None if state.init_s is None else state.init_s.tolist(),
        "init_h": None if state.init_h is None else state.init_h.tolist(),
    }
    with open(os.path.join(out_dir, "model.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    write_embeddings_csv(os.path.join(out_dir, "embeddings.csv"), state, orig_ids)


def write_embeddings_csv(path: str, state: ModelState, orig_ids: list[str]) -> None:
    d = state.dim
    cols = ["id"] + [f"s{i}" for i in range(d)] + [f"h{i}" for i in range(d + 1)]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(state.n):
            vals = [orig_ids[i]]
            vals += [f"{v:.17g}" for v in state.z_s[i]]
            vals += [f"{v:.17g}" for v in state.z_h[i]]
            fh.write(",".join(vals) + "\n")


def load_model(model_dir: str) -> tuple[ModelState, list[str]]:
    """Rebuild a ModelState (and the node id order) from ``save_model`` output."""
    with open(os.path.join(model_dir, "model.json"), encoding="utf-8") as fh:
        doc = json.load(fh)
    ids: list[str] = []
    z_s = np.zeros((doc["n"], doc["dim"]))
    z_h = np.zeros((doc["n"], doc["dim"] + 1))
    with open(os.path.join(model_dir, "embeddings.csv"), encoding="utf-8") as fh:
        header = fh.readline()
        d = doc["dim"]
        for row, line in enumerate(fh):
            parts = line.rstrip("\n").split(",")
            ids.append(parts[0])
            z_s[row] = [float(v) for v in parts[1 : 1 + d]]
            z_h[row] = [float(v) for v in parts[1 + d :]]
    state = ModelState(
        mode=doc["mode"],
        hom_space=doc["hom_space"],
        rank_space=doc["rank_space"],
        dim=doc["dim"],
        w_s=doc["w_s"],
        n=doc["n"],
        seed=doc["seed"],
        params=MixtureParams(**doc["params"]),
        prior_direction=np.asarray(doc["prior_direction"]),
        raw_concentration=doc["raw_concentration"],
        raw_amplitude=doc["raw_amplitude"],
        raw_dispersion=doc["raw_dispersion"],
        unify=doc["unify"],
        gamma_fixed=doc["gamma_fixed"],
        z_s=z_s,
        z_h=z_h,
        weights_s=None if doc["weights_s"] is None else [np.asarray(w) for w in doc["weights_s"]],
        weights_h=None if doc["weights_h"] is None else [np.asarray(w) for w in doc["weights_h"]],
        init_s=None if doc["init_s"] is None else np.asarray(doc["init_s"]),
        init_h=None if doc["init_h"] is None else np.asarray(doc["init_h"]),
        final_softmax=doc["final_softmax"],
    )
    return state, ids
