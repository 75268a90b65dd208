import numpy as np
import pytest

from pine.graph import build_graph


def random_graph(n, edge_prob, rng, d=4, typed=None):
    """Erdos-Renyi style directed graph with gaussian features."""
    src, dst = [], []
    for i in range(n):
        for j in range(n):
            if i != j and rng.random() < edge_prob:
                src.append(i)
                dst.append(j)
    etype = rng.integers(0, typed, len(src)) if typed else None
    return build_graph(n, np.array(src), np.array(dst), rng.normal(size=(n, d)), edge_type=etype)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def planted_heterogeneous_graph(n=2000, planted_edges=6000, noise_edges=1500, seed=0, d=8):
    """Three-edge-type graph where only type 0 tracks a planted per-node
    importance: type-0 sources are drawn proportionally to importance,
    noise-type endpoints are uniform.  Returns (graph, importance)."""
    rng = np.random.default_rng(seed)
    importance = rng.pareto(2.0, n) + 0.05
    direction = rng.normal(size=d)
    direction /= np.linalg.norm(direction)
    feats = importance[:, None] * direction + 0.5 * rng.normal(size=(n, d))

    p = importance / importance.sum()
    src = [rng.choice(n, size=planted_edges, p=p)]
    dst = [rng.integers(0, n, planted_edges)]
    etype = [np.zeros(planted_edges, dtype=np.int64)]
    for t in (1, 2):
        src.append(rng.integers(0, n, noise_edges))
        dst.append(rng.integers(0, n, noise_edges))
        etype.append(np.full(noise_edges, t, dtype=np.int64))
    src, dst, etype = np.concatenate(src), np.concatenate(dst), np.concatenate(etype)
    keep = src != dst
    g = build_graph(n, src[keep], dst[keep], feats, edge_type=etype[keep])
    return g, importance
