"""Command-line front-end: train, eval, generate.

Exit codes: 0 on success, 1 on runtime failures (unreadable files, bad
data, numeric aborts), 2 on usage errors (argparse's own convention).
Every run is deterministic given its flags; evaluation re-derives the
edge or node split from the seed stored in the model directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import plots
from .encoder import init_node_points, normalized_adjacency
from .graphio import (
    Graph,
    load_edge_list,
    load_labels,
    make_node_split,
    make_split,
    save_edge_list,
    save_id_map,
    save_labels,
)
from .losses import LossConfig
from .metrics import auc, node_classification, tangent_features
from .optimizer import OptimConfig
from .priors import SamplingError
from .synth import gen_from_model, gen_homophily, gen_influence, gen_mixed
from .tape import TapeError
from .training import (
    compute_losses,
    encode_with_weights,
    init_model,
    load_model,
    save_model,
    score_pairs,
    train,
)

REPORT_KEYS = ("auc", "ji", "hl", "f1", "gamma", "l_recon", "l_kl_s", "l_kl_h", "l_unify")


def _positive_float(text: str) -> float:
    v = float(text)
    if v <= 0.0:
        raise argparse.ArgumentTypeError(f"{text!r} is not a positive number")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"{text!r} is not a positive integer")
    return v


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"{text!r} is negative")
    return v


def _unit_interval(text: str) -> float:
    v = float(text)
    if not 0.0 <= v <= 1.0:
        raise argparse.ArgumentTypeError(f"{text!r} is not in [0, 1]")
    return v


def _space_spec(text: str):
    hom, rank = "S", "H"
    for part in text.split(","):
        key, sep, val = part.partition("=")
        key, val = key.strip(), val.strip().upper()
        if not sep:
            raise argparse.ArgumentTypeError(f"bad space spec {part!r}")
        if key == "hom" and val in ("E", "S"):
            hom = val
        elif key == "rank" and val in ("E", "H"):
            rank = val
        else:
            raise argparse.ArgumentTypeError(f"bad space spec {part!r}")
    return hom, rank


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geomix",
        description="Mixed spherical/hyperbolic graph embeddings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="fit embeddings on an edge list")
    p_train.add_argument("--graph", required=True, help="edge-list file")
    p_train.add_argument("--labels", default=None, help="node<TAB>class file")
    p_train.add_argument("--mode", choices=("nmm", "nmm-gnn"), default="nmm")
    p_train.add_argument("--dim", type=_positive_int, default=8)
    p_train.add_argument("--wS", type=_positive_float, default=0.5, dest="w_s")
    p_train.add_argument("--eta", type=_positive_float, default=OptimConfig.eta)
    p_train.add_argument("--lambdaA", type=_positive_float, default=LossConfig.lambda_a,
                         dest="lambda_a")
    p_train.add_argument("--epochs", type=_nonneg_int, default=200)
    p_train.add_argument("--seed", type=int, default=0)
    p_train.add_argument("--space", type=_space_spec, default=("S", "H"),
                         help="hom=<E|S>,rank=<E|H>")
    p_train.add_argument("--no-unify", action="store_true")
    p_train.add_argument("--gamma-fixed", type=_unit_interval, default=None)
    p_train.add_argument("--out", required=True, help="output directory")
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="score a trained model on a graph")
    p_eval.add_argument("--model", required=True, help="train output directory")
    p_eval.add_argument("--graph", required=True, help="edge-list file")
    p_eval.add_argument("--labels", default=None)
    p_eval.add_argument("--inductive", action="store_true",
                        help="node-level split; score edges at unseen nodes")
    p_eval.add_argument("--node-frac", type=_unit_interval, default=0.5)
    p_eval.add_argument("--out", default=None,
                        help="report directory (default: the model directory)")
    p_eval.set_defaults(func=cmd_eval)

    p_gen = sub.add_parser("generate", help="write a synthetic graph")
    p_gen.add_argument("--kind", required=True,
                       choices=("homophily", "influence", "mixed", "model"))
    p_gen.add_argument("--n", type=_nonneg_int, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--clusters", type=_positive_int, default=4)
    p_gen.add_argument("--p-in", type=_unit_interval, default=0.12)
    p_gen.add_argument("--p-out", type=_unit_interval, default=0.002)
    p_gen.add_argument("--attach-m", type=_positive_int, default=3)
    p_gen.add_argument("--mix", type=_unit_interval, default=0.5)
    p_gen.add_argument("--dim", type=_positive_int, default=4)
    p_gen.add_argument("--wS", type=_positive_float, default=0.5, dest="w_s")
    p_gen.add_argument("--gamma", type=_unit_interval, default=0.75)
    p_gen.add_argument("--concentration", type=_positive_float, default=4.0)
    p_gen.add_argument("--dispersion", type=_positive_float, default=0.7)
    p_gen.add_argument("--alignment-frac", type=_unit_interval, default=1.0)
    p_gen.add_argument("--out", required=True, help="output directory")
    p_gen.set_defaults(func=cmd_generate)

    return parser


def _fmt(v) -> str:
    v = float(v)
    if not np.isfinite(v):
        return "nan"
    return f"{v:.6f}"


def _write_report(path: str, values: dict) -> str:
    lines = "".join(f"{k}\t{_fmt(values[k])}\n" for k in REPORT_KEYS)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(lines)
    return lines


def _write_trace(path: str, trace: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch\tl_s\tl_h\tunify\tval_auc\n")
        for row in trace:
            fh.write(
                f"{row['epoch']}\t{row['l_s']:.17g}\t{row['l_h']:.17g}"
                f"\t{row['unify']:.17g}\t{row['val_auc']:.17g}\n"
            )


def cmd_train(args) -> int:
    graph = load_edge_list(args.graph)
    if args.labels:
        load_labels(args.labels, graph)
    hom_space, rank_space = args.space
    split = make_split(graph, args.seed)
    state = init_model(
        graph,
        mode=args.mode,
        dim=args.dim,
        w_s=args.w_s,
        seed=args.seed,
        hom_space=hom_space,
        rank_space=rank_space,
        unify=not args.no_unify,
        gamma_fixed=args.gamma_fixed,
    )
    opt = OptimConfig(eta=args.eta, epochs=args.epochs)
    loss_cfg = LossConfig(lambda_a=args.lambda_a)
    state, trace = train(graph, split, state, opt, loss_cfg)

    os.makedirs(args.out, exist_ok=True)
    save_model(state, args.out, graph.orig_ids)
    save_id_map(graph, os.path.join(args.out, "idmap.tsv"))
    _write_trace(os.path.join(args.out, "trace.tsv"), trace)
    if trace:
        plots.training_curves(trace, os.path.join(args.out, "curves.png"))
    final_val = trace[-1]["val_auc"] if trace else float("nan")
    sys.stdout.write(f"epochs_run\t{len(trace)}\n")
    sys.stdout.write(f"val_auc\t{_fmt(final_val)}\n")
    sys.stdout.write(f"gamma\t{_fmt(state.gamma_fixed if state.gamma_fixed is not None else state.params.gamma)}\n")
    return 0


def _eval_transductive(state, graph):
    split = make_split(graph, state.seed)
    pos = score_pairs(state, split.test_pos)
    neg = score_pairs(state, split.test_neg)
    losses = compute_losses(state, split.train_src, split.train_dst)
    return pos, neg, losses, state.z_s, state.z_h


def _eval_inductive(state, graph, node_frac):
    if state.mode != "nmm-gnn":
        raise ValueError("inductive evaluation needs an encoder model (--mode nmm-gnn)")
    ns = make_node_split(graph, state.seed, node_frac)
    vis = np.concatenate([ns.train_idx, ns.visible_idx])
    src, dst, w = graph.src[vis], graph.dst[vis], graph.weight[vis]
    a_hat = normalized_adjacency(graph.n, src, dst, w)
    rng = np.random.default_rng(state.seed)
    init_s, init_h = init_node_points(graph.n, state.dim, state.w_s, rng, graph.features)
    zs, zh = encode_with_weights(state, a_hat, init_s, init_h)
    view = state.clone()
    view.n = graph.n
    view.z_s, view.z_h = zs, zh
    pos = score_pairs(view, ns.heldout_pos)
    neg = score_pairs(view, ns.heldout_neg)
    losses = compute_losses(view, src, dst)
    return pos, neg, losses, zs, zh


def cmd_eval(args) -> int:
    state, ids = load_model(args.model)
    graph = load_edge_list(args.graph)
    if args.labels:
        load_labels(args.labels, graph)
    if args.inductive:
        pos, neg, losses, zs, zh = _eval_inductive(state, graph, args.node_frac)
    else:
        if graph.n != state.n or ids != graph.orig_ids:
            raise ValueError(
                "graph nodes do not match the model's training graph "
                f"({graph.n} vs {state.n}); transductive eval needs the same file"
            )
        pos, neg, losses, zs, zh = _eval_transductive(state, graph)

    if graph.labels is not None:
        feats = tangent_features(zs, zh, state.w_s, state.hom_space, state.rank_space)
        ji, hl, f1 = node_classification(feats, graph.labels, state.seed)
    else:
        ji = hl = f1 = float("nan")

    report = {
        "auc": auc(pos, neg),
        "ji": ji,
        "hl": hl,
        "f1": f1,
        "gamma": state.gamma_fixed if state.gamma_fixed is not None else state.params.gamma,
        "l_recon": losses["recon"],
        "l_kl_s": losses["kl_s"],
        "l_kl_h": losses["kl_h"],
        "l_unify": losses["unify"],
    }
    out_dir = args.out or args.model
    os.makedirs(out_dir, exist_ok=True)
    lines = _write_report(os.path.join(out_dir, "report.tsv"), report)
    plots.report_roc(pos, neg, os.path.join(out_dir, "report_roc.png"))
    sys.stdout.write(lines)
    return 0


def cmd_generate(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    truth = None
    if args.kind == "homophily":
        g = gen_homophily(args.n, args.clusters, args.p_in, args.p_out, args.seed)
    elif args.kind == "influence":
        g = gen_influence(args.n, args.attach_m, args.seed)
    elif args.kind == "mixed":
        g = gen_mixed(
            args.n, args.mix, args.seed, args.clusters,
            args.p_in, args.p_out, args.attach_m,
        )
    else:
        g, truth = gen_from_model(
            args.n,
            dim=args.dim,
            w_s=args.w_s,
            seed=args.seed,
            gamma=args.gamma,
            concentration=args.concentration,
            dispersion=args.dispersion,
            alignment_frac=args.alignment_frac,
        )
    save_edge_list(g, os.path.join(args.out, "edges.tsv"))
    if g.labels is not None:
        # the edge-list format cannot carry isolated nodes, so their labels
        # would be unresolvable on reload; keep labels for covered nodes only
        covered = np.zeros(g.n, dtype=bool)
        covered[g.src] = True
        covered[g.dst] = True
        trimmed = Graph(
            n=g.n, src=g.src, dst=g.dst, weight=g.weight,
            orig_ids=g.orig_ids,
            labels=np.where(covered[:, None], g.labels, 0),
        )
        save_labels(trimmed, os.path.join(args.out, "labels.tsv"))
    if truth is not None:
        _write_truth(args.out, g, truth)
    sys.stdout.write(f"nodes\t{g.n}\n")
    sys.stdout.write(f"edges\t{g.m}\n")
    return 0


def _write_truth(out_dir: str, g: Graph, truth: dict) -> None:
    z_s, z_h = truth["z_s"], truth["z_h"]
    d = z_s.shape[1]
    cols = ["id"] + [f"s{i}" for i in range(d)] + [f"h{i}" for i in range(d + 1)]
    with open(os.path.join(out_dir, "true_embeddings.csv"), "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for i in range(g.n):
            vals = [g.orig_ids[i]]
            vals += [f"{v:.17g}" for v in z_s[i]]
            vals += [f"{v:.17g}" for v in z_h[i]]
            fh.write(",".join(vals) + "\n")
    np.savetxt(os.path.join(out_dir, "plink.tsv"), truth["p"], fmt="%.17g", delimiter="\t")
    params = truth["params"]
    doc = {
        "slope_hom": params.slope_hom,
        "bias_hom": params.bias_hom,
        "slope_rank": params.slope_rank,
        "bias_rank": params.bias_rank,
        "gamma": params.gamma,
        "w_s": truth["w_s"],
    }
    with open(os.path.join(out_dir, "true_params.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, SamplingError, TapeError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
