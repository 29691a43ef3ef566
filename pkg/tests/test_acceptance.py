"""Acceptance gate: ten numbered end-to-end checks.

Each test prints one PASS/FAIL line to the terminal (bypassing capture)
so the run log carries a verdict per criterion.  Tolerances are pinned
in the assertions; diagnostic quantities are reported but never gated.
"""

import json
import subprocess
import sys
import time

import numpy as np

from sevq.baselines import brute_force_min_se, euclidean_rvq
from sevq.cli import main
from sevq.codebook import hierarchical_minimize, vanilla_greedy
from sevq.entropy import EncodingTree, Partition, encoding_tree_se, partition_se
from sevq.feature_io import save_features
from sevq.quantizer import (
    TrainConfig,
    assign,
    decode,
    encode,
    stage_reconstructions,
    train_codec,
)
from sevq.vclub import fit_pair, pair_value_and_grads, vclub_estimate

from .conftest import (
    graph_from_dense,
    mixture_features,
    planted_cliques_dense,
    random_weighted_dense,
    two_unit_edges_dense,
)
from .oracles import assign_oracle


def _verdict(capsys, number: int, name: str, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {number:02d} {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    with capsys.disabled():
        print(line)
    assert ok, line


def _cluster_sets(P: Partition) -> set[frozenset]:
    return {frozenset(np.flatnonzero(P.labels == k).tolist()) for k in range(P.K)}


def test_criterion_01_two_edge_entropy(capsys):
    G = graph_from_dense(two_unit_edges_dense())
    pairs = Partition.from_labels(G, np.array([0, 0, 1, 1]))
    singles = Partition.singletons(G)
    one = Partition.from_labels(G, np.zeros(4, dtype=np.int64))
    err = max(
        abs(partition_se(G, pairs) - 1.0),
        abs(partition_se(G, singles) - 2.0),
        abs(partition_se(G, one) - 2.0),
    )
    best = min(
        _timed_three(G, pairs, singles, one) for _ in range(20)
    )
    ok = err <= 1e-12 and best < 1e-3
    _verdict(capsys, 1, "two-edge entropy values", ok,
             f"max err {err:.1e}, {best * 1e3:.3f} ms")


def _timed_three(G, pairs, singles, one) -> float:
    t0 = time.perf_counter()
    partition_se(G, pairs)
    partition_se(G, singles)
    partition_se(G, one)
    return time.perf_counter() - t0


def test_criterion_02_tree_equals_partition(capsys):
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 33))
        G = graph_from_dense(random_weighted_dense(rng, n))
        raw = rng.integers(0, int(rng.integers(1, n + 1)), n)
        labels = np.unique(raw, return_inverse=True)[1]
        P = Partition.from_labels(G, labels)
        diff = abs(encoding_tree_se(G, EncodingTree.from_partition(P)) - partition_se(G, P))
        worst = max(worst, diff)
    ok = worst <= 1e-9
    _verdict(capsys, 2, "tree form equals partition form", ok,
             f"200 graphs, max |diff| {worst:.2e}")


def test_criterion_03_greedy_vs_brute_force(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    never_below = True
    worst_gap = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 9))
        G = graph_from_dense(random_weighted_dense(rng, n))
        gap = partition_se(G, vanilla_greedy(G)) - brute_force_min_se(G).best_se
        never_below &= gap >= -1e-9
        worst_gap = max(worst_gap, gap)
    planted_exact = True
    for cliques, size in ((2, 4), (2, 3)):
        W = planted_cliques_dense(cliques, size, 1.0, 0.05)
        G = graph_from_dense(W)
        gap = partition_se(G, vanilla_greedy(G)) - brute_force_min_se(G).best_se
        planted_exact &= abs(gap) <= 1e-9
    elapsed = time.perf_counter() - t0
    ok = never_below and planted_exact and elapsed < 10.0
    _verdict(capsys, 3, "greedy vs exact minimum", ok,
             f"50 random + 2 planted, worst gap {worst_gap:.2e}, {elapsed:.2f} s")


def test_criterion_04_hierarchical_equals_vanilla(capsys):
    rng = np.random.default_rng(2)
    identical = 0
    for _ in range(100):
        n = int(rng.integers(2, 65))
        G = graph_from_dense(random_weighted_dense(rng, n))
        if _cluster_sets(hierarchical_minimize(G, n=max(n, 2))) == _cluster_sets(
            vanilla_greedy(G)
        ):
            identical += 1
    ok = identical == 100
    _verdict(capsys, 4, "hierarchical equals vanilla", ok,
             f"{identical}/100 set-identical")


def test_criterion_05_codebook_size_discovery(capsys):
    t0 = time.perf_counter()
    model = train_codec(mixture_features(), stages=1)
    k_mixture = model.stages[0].K
    P = vanilla_greedy(graph_from_dense(planted_cliques_dense(3, 6, 1.0, 0.05)))
    elapsed = time.perf_counter() - t0
    ok = k_mixture == 5 and P.K == 3 and elapsed < 30.0
    _verdict(capsys, 5, "codebook size discovery", ok,
             f"mixture K={k_mixture}, cliques K={P.K}, {elapsed:.2f} s")


def test_criterion_06_assignment_matches_oracle(capsys):
    X = mixture_features()
    model = train_codec(X, stages=5, cfg=TrainConfig(anchors_per_cluster=8))
    stages_ok = model.n_stages >= 5
    rng = np.random.default_rng(3)
    R = X[rng.choice(X.shape[0], 12, replace=False)].copy()
    matches = total = 0
    for st in model.stages:
        queries = [R[i] for i in range(R.shape[0])]
        queries += [0.3 * rng.standard_normal(X.shape[1]) for _ in range(8)]
        for q in queries:
            total += 1
            matches += assign(st, q) == assign_oracle(st, q, st.tau)
        toks = np.array([assign(st, R[i]) for i in range(R.shape[0])])
        R -= st.centroids[toks]
    _, diags = encode(model, X[:100], eq4_diagnostics=True)
    agree = sum(d["argmax_agreement"] for d in diags)
    queries = sum(d["queries"] for d in diags)
    mad = max(d["max_abs_diff"] for d in diags)
    ok = stages_ok and total >= 100 and matches == total
    _verdict(
        capsys, 6, "assignment oracle equivalence", ok,
        f"{matches}/{total} exact over {model.n_stages} stages; diagnostic "
        f"four-term form: argmax agreement {agree}/{queries}, "
        f"max |closed - direct| {mad:.2e}",
    )


def test_criterion_07_residual_improvement(capsys):
    X = mixture_features()
    model = train_codec(X, stages=4)
    seq = encode(model, X)
    mses = [float(np.mean((X - r) ** 2)) for r in stage_reconstructions(model, seq)]
    non_increasing = all(b <= a + 1e-12 for a, b in zip(mses, mses[1:]))
    Ks = [st.K for st in model.stages]
    baseline, btok = euclidean_rvq(X, Ks, len(Ks), seed=0)
    base_mse = float(np.mean((X - baseline.decode(btok)) ** 2))
    ratio = mses[-1] / base_mse
    ok = non_increasing and ratio <= 1.25
    _verdict(capsys, 7, "residual stages and baseline ratio", ok,
             f"stage MSE {['%.4g' % m for m in mses]}, ratio {ratio:.4f} (K={Ks})")


def test_criterion_08_vclub_sanity(capsys):
    worst_est = 0.0
    for seed in (0, 1, 2):
        rng = np.random.default_rng(seed)
        si = rng.standard_normal((512, 4))
        sj = rng.standard_normal((512, 4))
        fwd, bwd = fit_pair(si, sj)
        worst_est = max(worst_est, abs(vclub_estimate(si, sj, fwd, bwd)))
    independent_ok = worst_est <= 0.1

    rng = np.random.default_rng(0)
    dup = rng.standard_normal((64, 4))
    fwd, bwd = fit_pair(dup, dup.copy())
    dup_est = vclub_estimate(dup, dup.copy(), fwd, bwd)
    dup_ok = dup_est > 0.0

    si0 = rng.standard_normal((128, 4))
    sj0 = 0.5 * si0 + 0.1 * rng.standard_normal((128, 4))
    fwd, bwd = fit_pair(si0, sj0)
    si = si0 + np.array([0.3, -0.1, 0.2, 0.05])
    sj = sj0 + np.array([-0.15, 0.25, 0.1, -0.3])
    _, gi, gj = pair_value_and_grads(si, sj, fwd, bwd)
    h, worst_rel = 1e-5, 0.0
    for c in range(4):
        e = np.zeros(4)
        e[c] = h
        fd_i = (vclub_estimate(si + e, sj, fwd, bwd)
                - vclub_estimate(si - e, sj, fwd, bwd)) / (2 * h)
        fd_j = (vclub_estimate(si, sj + e, fwd, bwd)
                - vclub_estimate(si, sj - e, fwd, bwd)) / (2 * h)
        worst_rel = max(
            worst_rel,
            abs(fd_i - gi[c]) / max(abs(fd_i), abs(gi[c]), 1e-12),
            abs(fd_j - gj[c]) / max(abs(fd_j), abs(gj[c]), 1e-12),
        )
    fd_ok = worst_rel < 1e-4
    ok = independent_ok and dup_ok and fd_ok
    _verdict(capsys, 8, "MI bound sanity", ok,
             f"independent |est| <= {worst_est:.4f}, duplicate est {dup_est:.3g}, "
             f"gradient rel err {worst_rel:.2e}")


def test_criterion_09_cross_process_reproducibility(capsys, tmp_path):
    X = mixture_features(per_component=40)
    blobs = {}
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        save_features(X, str(d / "features.csv"))
        args = ["--stages", "2", "--anchors-per-cluster", "8", "--seed", "0"]
        for command in (["train"] + args, ["encode"]):
            proc = subprocess.run(
                [sys.executable, "-m", "sevq"] + command,
                cwd=d, capture_output=True, text=True,
            )
            assert proc.returncode == 0, proc.stderr
        blobs[run] = {
            "model": (d / "model.json").read_bytes(),
            "tokens": (d / "tokens.csv").read_bytes(),
        }
    ok = (
        blobs["a"]["model"] == blobs["b"]["model"]
        and blobs["a"]["tokens"] == blobs["b"]["tokens"]
    )
    _verdict(capsys, 9, "cross-process byte identity", ok,
             f"model {len(blobs['a']['model'])} B, tokens "
             f"{len(blobs['a']['tokens'])} B identical across two processes")


def test_criterion_10_default_config_echo(capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    save_features(mixture_features(), "features.csv")
    rc = main(["train"])
    report = json.loads((tmp_path / "model.json.report.json").read_text())
    echo = report["config"]
    ok = rc == 0 and echo["max_nodes"] == 10000 and echo["tau"] == 0.2
    _verdict(capsys, 10, "default configuration echo", ok,
             f"max_nodes={echo['max_nodes']}, tau={echo['tau']}")
