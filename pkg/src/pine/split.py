"""Edge partitioning for link prediction: message passing vs supervision,
train/validation/test positives, and uniform negative sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import AttributedGraph, build_graph


class SplitError(ValueError):
    """Graph too small to produce every nonempty part."""


@dataclass
class EdgeSplit:
    """(E, 2) arrays of (src, dst) pairs.  Message edges are the structure
    visible to the model; supervision/val/test positives are prediction
    targets only and never overlap the message set."""

    message_edges: np.ndarray
    supervision_pos: np.ndarray
    val_pos: np.ndarray
    test_pos: np.ndarray
    val_neg: np.ndarray
    test_neg: np.ndarray
    num_nodes: int

    def message_graph(self, g: AttributedGraph) -> AttributedGraph:
        return build_graph(
            g.num_nodes,
            self.message_edges[:, 0],
            self.message_edges[:, 1],
            g.features,
            id_map=list(g.id_map),
        )


def _edge_keys(pairs: np.ndarray, n: int) -> np.ndarray:
    return pairs[:, 0].astype(np.int64) * n + pairs[:, 1]


def sample_negatives(g: AttributedGraph, count: int, rng: np.random.Generator, forbidden: set | None = None) -> np.ndarray:
    """Uniformly sampled ordered node pairs that are not edges, not
    self-pairs, and distinct within the returned batch."""
    n = g.num_nodes
    existing = set(_edge_keys(np.stack([g.edge_src, g.edge_dst], axis=1), n).tolist())
    if forbidden:
        existing |= forbidden
    out = []
    seen = set()
    max_attempts = 100 * max(count, 1) + 1000
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > max_attempts:
            raise SplitError(f"could not sample {count} negatives from a graph with N={n}, M={g.num_edges}")
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n))
        key = u * n + v
        if u == v or key in existing or key in seen:
            continue
        seen.add(key)
        out.append((u, v))
    return np.array(out, dtype=np.int64).reshape(-1, 2)


def split_edges(
    g: AttributedGraph,
    fractions: tuple[float, float, float] = (0.70, 0.15, 0.15),
    supervision_fraction: float = 0.30,
    rng_seed: int = 0,
) -> EdgeSplit:
    """Uniform random partition of the edges into train/val/test, with a
    disjoint supervision subset carved out of train; the rest of train is
    the message-passing structure.  Validation/test negatives are sampled
    once here (1:1 with positives) and stay fixed."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("fractions must sum to 1")
    m = g.num_edges
    rng = np.random.default_rng(rng_seed)
    perm = rng.permutation(m)
    pairs = np.stack([g.edge_src, g.edge_dst], axis=1)[perm]

    n_val = int(fractions[1] * m)
    n_test = int(fractions[2] * m)
    n_train = m - n_val - n_test
    n_sup = int(supervision_fraction * n_train)
    n_msg = n_train - n_sup
    if min(n_val, n_test, n_sup, n_msg) < 1:
        raise SplitError(f"graph with M={m} edges is too small to split into nonempty parts")

    train, val, test = pairs[:n_train], pairs[n_train : n_train + n_val], pairs[n_train + n_val :]
    supervision, message = train[:n_sup], train[n_sup:]
    val_neg = sample_negatives(g, n_val, rng)
    test_neg = sample_negatives(g, n_test, rng, forbidden=set(_edge_keys(val_neg, g.num_nodes).tolist()))
    return EdgeSplit(
        message_edges=message,
        supervision_pos=supervision,
        val_pos=val,
        test_pos=test,
        val_neg=val_neg,
        test_neg=test_neg,
        num_nodes=g.num_nodes,
    )
