"""End-to-end acceptance checks, one numbered criterion per test.

Each test prints a single `[criterion N] PASS/FAIL` line (run with `-s` to
see them).  Criteria 1 and 2 need the Cora and CiteSeer citation datasets
on disk under data/; they skip with an explanation when the files are
absent, since this environment cannot download them.
"""

import itertools
import os
from pathlib import Path

import numpy as np
import pytest

from pine import centrality as ct
from pine import gat
from pine.diffusion import (
    DiffusionConfig,
    compute_influence_weights,
    influence_spread,
    run_sir,
)
from pine.graph import build_graph, largest_weak_component, load_graph
from pine.metrics import ndcg_at_k, precision_at_k, spearman
from pine.pine_score import (
    calibrate_by_out_degree,
    heterogeneous_pine,
    pine_scores,
    select_edge_types,
)
from pine.pipeline import run_pipeline
from pine.train import TrainConfig

from conftest import planted_heterogeneous_graph, random_graph
from test_centrality import (
    betweenness_enumeration_oracle,
    dense_adjacency,
    pagerank_dense_oracle,
)
from test_diffusion import ic_exact_expected_spread

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
DATASET_SKIP = (
    "dataset files not found under {path}; place edges.txt and features.csv there "
    "(this sandbox has no network access, so the citation datasets cannot be fetched)"
)


def _report(num, ok, detail):
    print(f"\n[criterion {num}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def _dataset(name):
    d = DATA_DIR / name
    if not (d / "edges.txt").exists() or not (d / "features.csv").exists():
        pytest.skip(DATASET_SKIP.format(path=d))
    g = load_graph(d / "edges.txt", d / "features.csv")
    return largest_weak_component(g)


def test_criterion_1_link_prediction_auc():
    from pine.pipeline import train_and_test_auc

    results = {}
    for name, lr, floor in (("cora", 5e-4, 0.85), ("citeseer", 1e-3, 0.88)):
        g = _dataset(name)
        aucs = []
        for seed in range(5):
            config = TrainConfig(learning_rate=lr, hidden_size=512, num_layers=1, rng_seed=seed)
            _model, _log, auc = train_and_test_auc(g, config)
            aucs.append(auc)
        results[name] = (float(np.mean(aucs)), floor)
    ok = all(mean >= floor for mean, floor in results.values())
    _report(1, ok, f"mean test AUC over 5 seeds: {results}")


def test_criterion_2_spread_ordering():
    from pine.pipeline import compute_method_scores, load_config  # noqa: F401
    from pine.split import split_edges
    from pine.train import train

    expected = {"cora": 0.688, "citeseer": 0.511}
    details = []
    ok = True
    for name in ("cora", "citeseer"):
        g = _dataset(name)
        config = TrainConfig(hidden_size=512, num_layers=1, learning_rate=5e-4, rng_seed=0)
        split = split_edges(g, rng_seed=0)
        model, _log = train(g, split, config)
        gat.forward(model, g)
        spreads = {}
        methods = {
            "pine": pine_scores(model, g),
            "degree": ct.degree(g),
            "out_degree": ct.out_degree(g),
            "weighted": ct.weighted_out_degree(g),
            "relative": ct.relative_out_degree(g, 0.5),
        }
        dconf = DiffusionConfig(model="ltp", num_runs=1000, rng_seed=0)
        for label, sv in methods.items():
            seeds = sv.top_fraction(0.1)
            spreads[label] = influence_spread(g, dconf, seeds).mean_spread
        baselines_beaten = all(spreads["pine"] > spreads[m] for m in methods if m != "pine")
        near_reported = abs(spreads["pine"] - expected[name]) <= 0.05
        ok = ok and baselines_beaten and near_reported
        details.append(f"{name}: {spreads} (reported {expected[name]})")
    _report(2, ok, "; ".join(details))


def test_criterion_3_conservation():
    rng = np.random.default_rng(0)
    worst_attn, worst_score = 0.0, 0.0
    for trial in range(10):
        g = random_graph(rng.integers(10, 60), 0.15, rng, d=5)
        model = gat.init_model(5, 6, 2, rng, dtype=np.float64)
        for layer in model.layers:
            layer.attn_src[:] = rng.normal(size=6)
            layer.attn_dst[:] = rng.normal(size=6)
        gat.forward(model, g)
        for layer_index in range(2):
            alpha = model.attention[layer_index]
            sums = np.bincount(g.edge_dst, weights=alpha, minlength=g.num_nodes)
            receiving = g.in_degrees() > 0
            worst_attn = max(worst_attn, float(np.abs(sums[receiving] - 1.0).max()))
            total = pine_scores(model, g, layer_index).values.sum()
            worst_score = max(worst_score, abs(total - int(receiving.sum())))
    ok = worst_attn <= 1e-6 and worst_score <= 1e-6
    _report(3, ok, f"max |attention sum - 1| = {worst_attn:.2e}, max |Σscore - #receivers| = {worst_score:.2e}")


def test_criterion_4_gradient_oracle():
    rng = np.random.default_rng(7)
    checked, failures, worst = 0, 0, 0.0
    for trial in range(20):
        n = int(rng.integers(5, 16))
        d = int(rng.integers(2, 9))
        layers = 1 + trial % 2
        g = random_graph(n, 0.3, rng, d=d)
        if g.num_edges < 4:
            g = build_graph(n, [0, 1, 2, 3], [1, 2, 3, 0], rng.normal(size=(n, d)))
        model = gat.init_model(d, 3, layers, rng, dtype=np.float64)
        for layer in model.layers:
            layer.attn_src[:] = rng.normal(size=3) * 0.5
            layer.attn_dst[:] = rng.normal(size=3) * 0.5
        k = min(4, g.num_edges)
        pos = np.stack([g.edge_src[:k], g.edge_dst[:k]], axis=1)
        neg = rng.integers(0, n, size=(k, 2))
        _, grads = gat.loss_and_gradients(model, g, pos, neg)
        eps = 1e-6
        for li, layer in enumerate(model.layers):
            for arr, analytic in zip([layer.proj, layer.attn_src, layer.attn_dst], grads[li]):
                flat, aflat = arr.reshape(-1), analytic.reshape(-1)
                for idx in range(flat.size):
                    orig = flat[idx]
                    flat[idx] = orig + eps
                    lp, _ = gat.loss_and_gradients(model, g, pos, neg)
                    flat[idx] = orig - eps
                    lm, _ = gat.loss_and_gradients(model, g, pos, neg)
                    flat[idx] = orig
                    fd = (lp - lm) / (2 * eps)
                    rel = abs(fd - aflat[idx]) / max(1e-8, abs(fd) + abs(aflat[idx]))
                    worst = max(worst, rel)
                    checked += 1
                    failures += rel >= 1e-4
    ok = failures == 0
    _report(4, ok, f"{checked} parameters over 20 graphs, worst relative error {worst:.2e}")


def lt_exact_expected_spread(g, influence, seeds):
    """Exact expected activation count via the triggering-set equivalence:
    each node independently selects at most one in-edge, edge k with
    probability influence[k]; a node activates iff reachable from the seeds
    through selected edges."""
    per_node = []
    for i in range(g.num_nodes):
        in_edges = [k for k in range(g.num_edges) if g.edge_dst[k] == i]
        options = [(g.edge_src[k], influence[k]) for k in in_edges]
        options.append((None, 1.0 - sum(p for _, p in options)))
        per_node.append(options)
    expected = 0.0
    for combo in itertools.product(*per_node):
        prob = 1.0
        for _, p in combo:
            prob *= p
        if prob == 0.0:
            continue
        active = set(seeds)
        changed = True
        while changed:
            changed = False
            for i, (src, _) in enumerate(combo):
                if i not in active and src is not None and int(src) in active:
                    active.add(i)
                    changed = True
        expected += prob * len(active)
    return expected


def test_criterion_5_diffusion_exactness():
    rng = np.random.default_rng(11)
    details, ok = [], True
    for trial in range(3):
        n = int(rng.integers(3, 6))
        g = random_graph(n, 0.45, rng, d=3)
        if g.num_edges == 0:
            g = build_graph(n, [0], [1 % n if n > 1 else 0], rng.normal(size=(n, 3)))
        w = compute_influence_weights(g)
        seeds = [0]
        for model, oracle in (
            ("ltp", lt_exact_expected_spread),
            ("icp", ic_exact_expected_spread),
        ):
            config = DiffusionConfig(model=model, num_runs=100_000, rng_seed=trial)
            result = influence_spread(g, config, seeds)
            exact = oracle(g, w.combined, seeds) / n
            se = result.std_spread / np.sqrt(result.runs)
            dev = abs(result.mean_spread - exact)
            ok = ok and dev <= 3 * max(se, 1e-12)
            details.append(f"{model} n={n}: |mc-exact|={dev:.5f} (3se={3 * se:.5f})")
    # single-edge SIR: destination infection probability equals beta
    g2 = build_graph(2, [0], [1], np.ones((2, 2)))
    beta = 0.37
    hits = sum(
        run_sir(g2, beta, 1.0, [0], np.random.default_rng([5, r]))[1] for r in range(100_000)
    )
    p_hat = hits / 100_000
    se = np.sqrt(beta * (1 - beta) / 100_000)
    sir_ok = abs(p_hat - beta) <= 3 * se
    ok = ok and sir_ok
    details.append(f"sir single edge: p̂={p_hat:.4f} vs β={beta}")
    _report(5, ok, "; ".join(details))


def test_criterion_6_centrality_oracles():
    rng = np.random.default_rng(3)
    worst_pr = 0.0
    for _ in range(50):
        g = random_graph(int(rng.integers(3, 25)), 0.2, rng, d=2)
        worst_pr = max(worst_pr, float(np.abs(ct.pagerank(g).values - pagerank_dense_oracle(g)).max()))
    worst_bt = 0.0
    for _ in range(10):
        g = random_graph(int(rng.integers(4, 13)), 0.25, rng, d=2)
        worst_bt = max(
            worst_bt, float(np.abs(ct.betweenness(g).values - betweenness_enumeration_oracle(g)).max())
        )
    worst_kz = 0.0
    for _ in range(10):
        g = random_graph(int(rng.integers(3, 20)), 0.2, rng, d=2)
        at = dense_adjacency(g).T
        exact = np.linalg.solve(np.eye(g.num_nodes) - 0.005 * at, 0.005 * at @ np.ones(g.num_nodes))
        worst_kz = max(
            worst_kz, float(np.abs(ct.katz(g, attenuation=0.005, normalize=False).values - exact).max())
        )
    ok = worst_pr <= 1e-8 and worst_bt <= 1e-9 and worst_kz <= 1e-8
    _report(6, ok, f"pagerank dev {worst_pr:.2e}, betweenness dev {worst_bt:.2e}, katz dev {worst_kz:.2e}")


def test_criterion_7_metric_worked_examples():
    truth = np.array([3.0, 2.0, 1.0])
    predicted = np.array([2.0, 3.0, 1.0])  # swaps the top two items
    ndcg = ndcg_at_k(predicted, truth, 3)
    rho = spearman([1.0, 2.0, 4.0, 3.0], [1.0, 2.0, 3.0, 4.0])
    p_perfect = precision_at_k(truth, truth, 2)
    p_zero = precision_at_k(np.array([0.0, 0.0, 5.0, 6.0]), np.array([5.0, 6.0, 0.0, 0.0]), 2)
    ok = (
        round(float(ndcg), 4) == 0.9225
        and round(float(rho), 4) == 0.8
        and p_perfect == 1.0
        and p_zero == 0.0
    )
    _report(7, ok, f"ndcg={ndcg:.4f} (0.9225), spearman={rho:.4f} (0.8), precision bounds {p_perfect}/{p_zero}")


def test_criterion_8_heterogeneous_planted():
    config = TrainConfig(learning_rate=1e-2, hidden_size=8, num_layers=1, max_epochs=30, patience=10)
    recovered = 0
    for seed in range(10):
        g, imp = planted_heterogeneous_graph(seed=seed)
        rng = np.random.default_rng(seed)
        labeled = rng.choice(g.num_nodes, size=300, replace=False)
        labels = [(int(v), float(imp[v])) for v in labeled]
        result = select_edge_types(g, labels, top_k_types=3, config=config)
        recovered += 0 in result.selected
    g, imp = planted_heterogeneous_graph(seed=0)
    rng = np.random.default_rng(0)
    labeled = rng.choice(g.num_nodes, size=300, replace=False)
    result = select_edge_types(g, [(int(v), float(imp[v])) for v in labeled], top_k_types=3, config=config)
    combined = heterogeneous_pine(g, result.selected, result.models)
    calibrated = calibrate_by_out_degree(combined, g)
    rho = spearman(calibrated.values, imp)
    ok = recovered >= 9 and rho >= 0.5
    _report(8, ok, f"planted type recovered in {recovered}/10 runs, calibrated spearman {rho:.3f}")


def test_criterion_9_pipeline_determinism(tmp_path, monkeypatch):
    rng = np.random.default_rng(21)
    g = random_graph(60, 0.07, rng, d=5)
    edges, feats = tmp_path / "edges.txt", tmp_path / "feats.csv"
    g.write_edge_list(edges)
    np.savetxt(feats, g.features, delimiter=",")
    config = tmp_path / "conf.ini"
    config.write_text(
        f"[graph]\nedges = {edges}\nfeatures = {feats}\n"
        "[pipeline]\nmethods = out_degree, pagerank, pine\nmodels = ltp, icp, sir\n"
        "[diffusion]\nruns = 200\n[train]\nhidden = 8\nmax_epochs = 15\npatience = 5\nlr = 0.01\n"
    )
    reports = []
    for workers in ("1", "8", "1", "8"):
        monkeypatch.setenv("PINE_THREADS", workers)
        reports.append(run_pipeline(config))
    ok = all(r == reports[0] for r in reports[1:])
    _report(9, ok, f"4 runs across worker counts {{1, 8}} byte-identical: {ok}")
