"""Graph loading, formats, and evaluation splits.

Edge lists are whitespace-separated ``src dst [weight]`` lines with ``#``
comments. Node ids are arbitrary strings remapped to dense integers in
first-seen order; the mapping is kept on the graph so exports stay joinable
with the input ids. Directed input is treated as undirected: duplicate
edges collapse by weight summation, antiparallel pairs merge by max weight,
self-loops are dropped (the encoder adds its own).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class Graph:
    """Undirected weighted graph over dense node ids 0..n-1."""

    n: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    orig_ids: list[str]
    labels: np.ndarray | None = None  # (n, n_classes) multi-hot
    features: np.ndarray | None = None

    @property
    def m(self) -> int:
        return int(self.src.size)

    def edge_keys(self) -> set[int]:
        """Canonical pair keys (min * n + max) for membership tests."""
        a = np.minimum(self.src, self.dst)
        b = np.maximum(self.src, self.dst)
        return set((a * self.n + b).tolist())

    def dense_adjacency(self, binary: bool = True) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        w = np.ones_like(self.weight) if binary else self.weight
        a[self.src, self.dst] = w
        a[self.dst, self.src] = w
        return a

    def degrees(self) -> np.ndarray:
        d = np.zeros(self.n)
        np.add.at(d, self.src, 1.0)
        np.add.at(d, self.dst, 1.0)
        return d


def _merge_edges(n: int, raw: list[tuple[int, int, float]]):
    """Collapse duplicates (sum) then antiparallel pairs (max)."""
    per_direction: dict[tuple[int, int], float] = {}
    for u, v, w in raw:
        key = (u, v)
        per_direction[key] = per_direction.get(key, 0.0) + w
    merged: dict[tuple[int, int], float] = {}
    for (u, v), w in per_direction.items():
        key = (min(u, v), max(u, v))
        prev = merged.get(key)
        merged[key] = w if prev is None else max(prev, w)
    if not merged:
        return (
            np.zeros(0, dtype=int),
            np.zeros(0, dtype=int),
            np.zeros(0, dtype=float),
        )
    pairs = sorted(merged)
    src = np.array([p[0] for p in pairs], dtype=int)
    dst = np.array([p[1] for p in pairs], dtype=int)
    weight = np.array([merged[p] for p in pairs], dtype=float)
    return src, dst, weight


def graph_from_edges(pairs, n=None, orig_ids=None, labels=None) -> Graph:
    """Build a Graph from (u, v[, w]) tuples over dense ids."""
    raw = []
    max_id = -1
    for e in pairs:
        u, v = int(e[0]), int(e[1])
        w = float(e[2]) if len(e) > 2 else 1.0
        max_id = max(max_id, u, v)
        if u == v:
            continue
        raw.append((u, v, w))
    if n is None:
        n = max_id + 1
    src, dst, weight = _merge_edges(n, raw)
    if orig_ids is None:
        orig_ids = [str(i) for i in range(n)]
    return Graph(n=n, src=src, dst=dst, weight=weight, orig_ids=orig_ids, labels=labels)


def load_edge_list(path) -> Graph:
    """Parse an edge-list file into an undirected Graph."""
    ids: dict[str, int] = {}
    raw: list[tuple[int, int, float]] = []

    def dense(tok: str) -> int:
        if tok not in ids:
            ids[tok] = len(ids)
        return ids[tok]

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) not in (2, 3):
                raise ValueError(f"{path}:{lineno}: expected 'src dst [weight]', got {line!r}")
            u, v = dense(parts[0]), dense(parts[1])
            try:
                w = float(parts[2]) if len(parts) == 3 else 1.0
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad weight {parts[2]!r}") from None
            if u == v:
                continue
            raw.append((u, v, w))
    n = len(ids)
    if n == 0:
        raise ValueError(f"{path}: no edges found (empty graph)")
    src, dst, weight = _merge_edges(n, raw)
    orig = [None] * n
    for tok, i in ids.items():
        orig[i] = tok
    return Graph(n=n, src=src, dst=dst, weight=weight, orig_ids=list(orig))


def symmetrize(graph: Graph) -> Graph:
    """Collapse duplicates and antiparallel pairs; idempotent."""
    raw = [
        (int(u), int(v), float(w))
        for u, v, w in zip(graph.src, graph.dst, graph.weight)
    ]
    src, dst, weight = _merge_edges(graph.n, raw)
    return Graph(
        n=graph.n, src=src, dst=dst, weight=weight,
        orig_ids=graph.orig_ids, labels=graph.labels, features=graph.features,
    )


def induced_subgraph(graph: Graph, nodes) -> Graph:
    """Subgraph on the given nodes with ids, labels, features carried over."""
    nodes = np.sort(np.asarray(nodes, dtype=int))
    remap = -np.ones(graph.n, dtype=int)
    remap[nodes] = np.arange(nodes.size)
    keep = (remap[graph.src] >= 0) & (remap[graph.dst] >= 0)
    return Graph(
        n=int(nodes.size),
        src=remap[graph.src[keep]],
        dst=remap[graph.dst[keep]],
        weight=graph.weight[keep].copy(),
        orig_ids=[graph.orig_ids[i] for i in nodes],
        labels=None if graph.labels is None else graph.labels[nodes],
        features=None if graph.features is None else graph.features[nodes],
    )


def save_edge_list(graph: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u, v, w in zip(graph.src, graph.dst, graph.weight):
            if w == 1.0:
                fh.write(f"{graph.orig_ids[u]}\t{graph.orig_ids[v]}\n")
            else:
                fh.write(f"{graph.orig_ids[u]}\t{graph.orig_ids[v]}\t{w:.17g}\n")


def load_labels(path, graph: Graph) -> np.ndarray:
    """Attach a multi-hot label matrix from ``node<TAB>class`` lines."""
    by_node: dict[int, set[int]] = {}
    rev = {tok: i for i, tok in enumerate(graph.orig_ids)}
    max_cls = -1
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'node class', got {line!r}")
            if parts[0] not in rev:
                raise ValueError(f"{path}:{lineno}: unknown node id {parts[0]!r}")
            try:
                cls = int(parts[1])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad class id {parts[1]!r}") from None
            if cls < 0:
                raise ValueError(f"{path}:{lineno}: class ids must be nonnegative")
            by_node.setdefault(rev[parts[0]], set()).add(cls)
            max_cls = max(max_cls, cls)
    labels = np.zeros((graph.n, max_cls + 1), dtype=np.int8)
    for node, classes in by_node.items():
        for cls in classes:
            labels[node, cls] = 1
    graph.labels = labels
    return labels


def save_labels(graph: Graph, path) -> None:
    if graph.labels is None:
        raise ValueError("graph carries no labels")
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(graph.n):
            for cls in np.flatnonzero(graph.labels[i]):
                fh.write(f"{graph.orig_ids[i]}\t{int(cls)}\n")


def save_id_map(graph: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for dense_id, tok in enumerate(graph.orig_ids):
            fh.write(f"{tok}\t{dense_id}\n")


def sample_non_edges(
    graph: Graph, count: int, rng: np.random.Generator, forbid: set[int] | None = None
) -> np.ndarray:
    """Sample distinct unordered non-edge pairs uniformly.

    Small graphs enumerate the complement exactly; larger ones fall back to
    rejection. ``forbid`` holds canonical keys already taken elsewhere.
    """
    n = graph.n
    keys = graph.edge_keys()
    if forbid:
        keys = keys | forbid
    total_pairs = n * (n - 1) // 2
    available = total_pairs - len(keys)
    if count > available:
        raise ValueError(f"requested {count} non-edges, only {available} exist")
    if n <= 2000:
        iu, ju = np.triu_indices(n, k=1)
        pair_keys = iu * n + ju
        mask = ~np.isin(pair_keys, np.fromiter(keys, dtype=int, count=len(keys)))
        pool = np.flatnonzero(mask)
        pick = rng.choice(pool.size, size=count, replace=False)
        sel = pool[np.sort(pick)]
        return np.stack([iu[sel], ju[sel]], axis=1)
    out = np.empty((count, 2), dtype=int)
    got = 0
    taken = set(keys)
    budget = 10**7
    while got < count:
        u = int(rng.integers(n))
        v = int(rng.integers(n))
        budget -= 1
        if budget <= 0:
            raise RuntimeError("non-edge rejection sampling exhausted its budget")
        if u == v:
            continue
        key = min(u, v) * n + max(u, v)
        if key in taken:
            continue
        taken.add(key)
        out[got] = (min(u, v), max(u, v))
        got += 1
    return out


@dataclass
class Split:
    """Edge-level split: train edges plus held-out positive/negative pairs.

    Validation pairs are a carve-out of the held-out pool (the fraction
    given at construction); test pairs are the remainder.
    """

    train_idx: np.ndarray
    heldout_pos: np.ndarray  # (M, 2)
    heldout_neg: np.ndarray  # (M, 2)
    n_val: int
    graph: Graph = field(repr=False)

    @property
    def val_pos(self) -> np.ndarray:
        return self.heldout_pos[: self.n_val]

    @property
    def val_neg(self) -> np.ndarray:
        return self.heldout_neg[: self.n_val]

    @property
    def test_pos(self) -> np.ndarray:
        return self.heldout_pos[self.n_val :]

    @property
    def test_neg(self) -> np.ndarray:
        return self.heldout_neg[self.n_val :]

    @property
    def train_src(self) -> np.ndarray:
        return self.graph.src[self.train_idx]

    @property
    def train_dst(self) -> np.ndarray:
        return self.graph.dst[self.train_idx]

    @property
    def train_weight(self) -> np.ndarray:
        return self.graph.weight[self.train_idx]


def make_split(
    graph: Graph, seed: int, train_frac: float = 0.9, val_frac: float = 0.1
) -> Split:
    """Hold out edges for evaluation.

    train_frac of the edges train the model; the remainder are the held-out
    positives, of which a val_frac share is reserved for validation-based
    early stopping. Negatives are non-edges matched one per positive.
    """
    if graph.m < 2:
        raise ValueError("graph too small to split")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(graph.m)
    n_train = int(round(train_frac * graph.m))
    n_train = min(max(n_train, 1), graph.m - 1)
    train_idx = np.sort(perm[:n_train])
    held_idx = perm[n_train:]
    heldout_pos = np.stack(
        [graph.src[held_idx], graph.dst[held_idx]], axis=1
    )
    heldout_neg = sample_non_edges(graph, heldout_pos.shape[0], rng)
    n_val = int(round(val_frac * heldout_pos.shape[0]))
    return Split(
        train_idx=train_idx,
        heldout_pos=heldout_pos,
        heldout_neg=heldout_neg,
        n_val=n_val,
        graph=graph,
    )


@dataclass
class NodeSplit:
    """Node-level (inductive) split.

    Training sees only the subgraph induced by the train nodes. Of the
    edges incident to test nodes, most stay visible so new nodes arrive
    with an observed neighborhood; a held-out share is what gets scored.
    """

    train_nodes: np.ndarray
    test_nodes: np.ndarray
    train_idx: np.ndarray
    visible_idx: np.ndarray
    heldout_pos: np.ndarray
    heldout_neg: np.ndarray
    graph: Graph = field(repr=False)


def make_node_split(
    graph: Graph, seed: int, node_frac: float = 0.5, heldout_frac: float = 0.1
) -> NodeSplit:
    rng = np.random.default_rng(seed)
    perm = rng.permutation(graph.n)
    n_train = int(round(node_frac * graph.n))
    train_nodes = np.sort(perm[:n_train])
    test_nodes = np.sort(perm[n_train:])
    is_train = np.zeros(graph.n, dtype=bool)
    is_train[train_nodes] = True
    both_train = is_train[graph.src] & is_train[graph.dst]
    train_idx = np.flatnonzero(both_train)
    incident_idx = np.flatnonzero(~both_train)
    incident_perm = rng.permutation(incident_idx.size)
    n_held = max(1, int(round(heldout_frac * incident_idx.size)))
    held = incident_idx[incident_perm[:n_held]]
    visible_idx = np.sort(incident_idx[incident_perm[n_held:]])
    heldout_pos = np.stack([graph.src[held], graph.dst[held]], axis=1)
    # negatives must touch a test node, mirroring the positives
    neg = []
    keys = graph.edge_keys()
    budget = 10**7
    while len(neg) < heldout_pos.shape[0]:
        u = int(rng.choice(test_nodes))
        v = int(rng.integers(graph.n))
        budget -= 1
        if budget <= 0:
            raise RuntimeError("inductive negative sampling exhausted its budget")
        if u == v:
            continue
        key = min(u, v) * graph.n + max(u, v)
        if key in keys:
            continue
        keys.add(key)
        neg.append((min(u, v), max(u, v)))
    return NodeSplit(
        train_nodes=train_nodes,
        test_nodes=test_nodes,
        train_idx=train_idx,
        visible_idx=visible_idx,
        heldout_pos=heldout_pos,
        heldout_neg=np.asarray(neg, dtype=int),
        graph=graph,
    )
