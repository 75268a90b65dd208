"""Single-head graph attention layers trained on link prediction.

Forward and backward passes are written directly against the CSR edge
arrays: per edge (j -> i) the unnormalized coefficient is
LeakyReLU((U h_j, s) + (U h_i, t)), softmax-normalized over the edges
incoming to i, and the updated embedding of i is the attention-weighted
sum of its in-neighbors' projections -- the node's own representation is
deliberately left out.  Nodes without in-edges map to the zero vector.
Gradients are accumulated by reverse-mode traversal of the same graph.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .graph import AttributedGraph

MAGIC_MODEL = b"PINEM1"
LEAKY_SLOPE = 0.2
PROB_EPS = 1e-7


@dataclass
class GatLayer:
    proj: np.ndarray  # (d_out, d_in)
    attn_src: np.ndarray  # (d_out,) dotted with the source projection
    attn_dst: np.ndarray  # (d_out,) dotted with the destination projection

    @property
    def d_in(self) -> int:
        return self.proj.shape[1]

    @property
    def d_out(self) -> int:
        return self.proj.shape[0]


@dataclass
class GatModel:
    layers: list[GatLayer]
    leaky_slope: float = LEAKY_SLOPE
    # populated by forward(): per-layer attention per edge, in the canonical
    # edge order of the graph it was forwarded on
    attention: list[np.ndarray] | None = field(default=None, repr=False)
    attention_edges: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def parameters(self):
        for layer in self.layers:
            yield layer.proj
            yield layer.attn_src
            yield layer.attn_dst

    def astype(self, dtype) -> "GatModel":
        return GatModel(
            [GatLayer(l.proj.astype(dtype), l.attn_src.astype(dtype), l.attn_dst.astype(dtype)) for l in self.layers],
            self.leaky_slope,
        )


def init_model(
    feature_dim: int,
    hidden_size: int,
    num_layers: int,
    rng: np.random.Generator,
    dtype=np.float32,
) -> GatModel:
    """Glorot-uniform projections, zero attention vectors (uniform initial
    attention over in-edges)."""
    layers = []
    d_in = feature_dim
    for _ in range(num_layers):
        limit = np.sqrt(6.0 / (d_in + hidden_size))
        proj = rng.uniform(-limit, limit, size=(hidden_size, d_in)).astype(dtype)
        layers.append(GatLayer(proj, np.zeros(hidden_size, dtype=dtype), np.zeros(hidden_size, dtype=dtype)))
        d_in = hidden_size
    return GatModel(layers)


def _leaky(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x > 0, x, slope * x)


def _elu(x: np.ndarray) -> np.ndarray:
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


@dataclass
class _LayerTape:
    h_in: np.ndarray
    projected: np.ndarray
    pre_act: np.ndarray  # per-edge coefficient before LeakyReLU
    alpha: np.ndarray
    aggregated: np.ndarray  # node embeddings before inter-layer activation


def forward(model: GatModel, g: AttributedGraph, keep_tape: bool = False):
    """Run the attention layers over the graph's features.

    Returns final node embeddings; caches per-layer attention on the model.
    With ``keep_tape`` the intermediates needed for the backward pass are
    returned as a second value.
    """
    if model.layers[0].d_in != g.feature_dim:
        raise ValueError(
            f"layer 1 expects width {model.layers[0].d_in}, graph features have {g.feature_dim}"
        )
    dtype = model.layers[0].proj.dtype
    src, dst = g.edge_src, g.edge_dst
    n = g.num_nodes
    h = g.features.astype(dtype)
    tapes: list[_LayerTape] = []
    attention: list[np.ndarray] = []
    for li, layer in enumerate(model.layers):
        projected = h @ layer.proj.T
        score_src = projected @ layer.attn_src
        score_dst = projected @ layer.attn_dst
        pre_act = score_src[src] + score_dst[dst]
        w = _leaky(pre_act, model.leaky_slope)
        seg_max = np.full(n, -np.inf, dtype=dtype)
        np.maximum.at(seg_max, dst, w)
        exp = np.exp(w - seg_max[dst]) if w.size else w
        denom = np.bincount(dst, weights=exp, minlength=n).astype(dtype)
        alpha = (exp / denom[dst]).astype(dtype) if w.size else exp
        adj = sparse.csr_matrix((alpha, (dst, src)), shape=(n, n), dtype=dtype)
        aggregated = adj @ projected
        attention.append(alpha)
        if keep_tape:
            tapes.append(_LayerTape(h, projected, pre_act, alpha, aggregated))
        h = _elu(aggregated) if li < model.num_layers - 1 else aggregated
    model.attention = attention
    model.attention_edges = (src, dst)
    if keep_tape:
        return h, tapes
    return h


def predict_edge(h_out: np.ndarray, j: int, i: int) -> float:
    """Logistic of the dot product of the two final embeddings."""
    return float(_sigmoid(np.dot(h_out[j], h_out[i]))[0])


def _sigmoid(x):
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def edge_scores(h_out: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    """Edge-existence probabilities for an (E, 2) array of (src, dst) pairs."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    logits = np.einsum("ij,ij->i", h_out[pairs[:, 0]], h_out[pairs[:, 1]])
    return _sigmoid(logits)


def loss_and_gradients(model: GatModel, g: AttributedGraph, pos_edges: np.ndarray, neg_edges: np.ndarray):
    """Binary cross-entropy over the balanced batch plus analytic gradients
    for every projection and attention vector.

    Probabilities are clamped to [eps, 1-eps] before the logs; inside the
    clamp the loss gradient w.r.t. the logit is the usual (z - y), and a
    clamped probability contributes zero gradient (the clamp is flat), which
    keeps finite differences of the computed loss exact.
    """
    dtype = model.layers[0].proj.dtype
    h_out, tapes = forward(model, g, keep_tape=True)
    pairs = np.concatenate([np.asarray(pos_edges).reshape(-1, 2), np.asarray(neg_edges).reshape(-1, 2)]).astype(np.int64)
    labels = np.concatenate([np.ones(len(pos_edges)), np.zeros(len(neg_edges))])

    z = edge_scores(h_out, pairs)
    z_clamped = np.clip(z, PROB_EPS, 1.0 - PROB_EPS)
    loss = -np.sum(labels * np.log(z_clamped) + (1.0 - labels) * np.log(1.0 - z_clamped))

    inside = (z > PROB_EPS) & (z < 1.0 - PROB_EPS)
    dlogit = np.where(inside, z - labels, 0.0).astype(dtype)
    d_h = np.zeros_like(h_out)
    np.add.at(d_h, pairs[:, 0], dlogit[:, None] * h_out[pairs[:, 1]])
    np.add.at(d_h, pairs[:, 1], dlogit[:, None] * h_out[pairs[:, 0]])

    grads = _backward(model, g, tapes, d_h)
    return float(loss), grads


def _backward(model: GatModel, g: AttributedGraph, tapes: list[_LayerTape], d_out: np.ndarray):
    src, dst = g.edge_src, g.edge_dst
    n = g.num_nodes
    dtype = d_out.dtype
    grads = []
    d_h = d_out
    for li in reversed(range(model.num_layers)):
        layer = model.layers[li]
        tape = tapes[li]
        if li < model.num_layers - 1:
            # through the inter-layer ELU
            a = tape.aggregated
            d_agg = d_h * np.where(a > 0, 1.0, np.exp(np.minimum(a, 0.0))).astype(dtype)
        else:
            d_agg = d_h
        alpha, projected = tape.alpha, tape.projected
        # aggregated_i = sum_e alpha_e projected[src_e]
        d_alpha = np.einsum("ij,ij->i", d_agg[dst], projected[src])
        adj = sparse.csr_matrix((alpha, (dst, src)), shape=(n, n), dtype=dtype)
        d_proj = adj.T @ d_agg
        # softmax over in-edge segments
        seg = np.bincount(dst, weights=alpha * d_alpha, minlength=n)
        d_w = alpha * (d_alpha - seg[dst])
        d_pre = d_w * np.where(tape.pre_act > 0, 1.0, model.leaky_slope)
        d_score_src = np.bincount(src, weights=d_pre, minlength=n)
        d_score_dst = np.bincount(dst, weights=d_pre, minlength=n)
        d_attn_src = projected.T @ d_score_src.astype(dtype)
        d_attn_dst = projected.T @ d_score_dst.astype(dtype)
        d_proj = d_proj + d_score_src[:, None].astype(dtype) * layer.attn_src + d_score_dst[:, None].astype(dtype) * layer.attn_dst
        d_u = d_proj.T @ tape.h_in
        d_h = d_proj @ layer.proj
        grads.append((d_u, d_attn_src, d_attn_dst))
    grads.reverse()
    return grads


def save_model(model: GatModel, path) -> None:
    """Versioned binary dump: magic, layer count, per-layer dims, f32 blobs.
    The attention cache is not persisted (recomputed by a forward pass)."""
    with open(path, "wb") as fh:
        fh.write(MAGIC_MODEL)
        fh.write(struct.pack("<Q", model.num_layers))
        for layer in model.layers:
            fh.write(struct.pack("<QQ", layer.d_in, layer.d_out))
        for layer in model.layers:
            layer.proj.astype("<f4").tofile(fh)
            layer.attn_src.astype("<f4").tofile(fh)
            layer.attn_dst.astype("<f4").tofile(fh)


def load_model(path) -> GatModel:
    with open(path, "rb") as fh:
        magic = fh.read(6)
        if magic != MAGIC_MODEL:
            raise ValueError(f"{path}: not a model file (bad magic {magic!r})")
        (num_layers,) = struct.unpack("<Q", fh.read(8))
        dims = [struct.unpack("<QQ", fh.read(16)) for _ in range(num_layers)]
        layers = []
        for d_in, d_out in dims:
            proj = np.fromfile(fh, dtype="<f4", count=d_in * d_out).reshape(d_out, d_in)
            s = np.fromfile(fh, dtype="<f4", count=d_out)
            t = np.fromfile(fh, dtype="<f4", count=d_out)
            layers.append(GatLayer(proj.astype(np.float32), s.astype(np.float32), t.astype(np.float32)))
    return GatModel(layers)
