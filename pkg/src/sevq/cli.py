"""Command-line surface: train, encode, decode, compare.

Every command reads and writes the formats in :mod:`sevq.feature_io`,
echoes its effective configuration into the JSON report it produces,
and isolates wall-clock measurements in a ``timing`` field so that two
runs with identical inputs and seed emit byte-identical artifacts
everywhere else.  Errors leave a single JSON object on stderr and map
to exit codes: 0 success, 2 usage or configuration, 3 data, 4 internal.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from .baselines import euclidean_rvq
from .errors import ConfigError, DataError, SevqError
from .feature_io import (
    load_features,
    load_model,
    load_tokens,
    save_features,
    save_model,
    save_tokens,
)
from .graph import build_graph, dump_edges_csv
from .quantizer import (
    TrainConfig,
    decode,
    distortion_report,
    encode,
    stage_reconstructions,
    train_codec,
)


@dataclass(frozen=True)
class RunConfig:
    """Effective settings of one CLI invocation; all fields have defaults."""

    command: str
    features: str = "features.csv"
    model: str = "model.json"
    tokens: str = "tokens.csv"
    output: str = "decoded.csv"
    reference: str | None = None
    report: str | None = None
    fmt: str | None = None
    tau: float = 0.2
    subset_n: int = 1024
    stages: int = 8
    anchors_per_cluster: int = 64
    max_nodes: int = 10000
    seed: int = 0
    disentangle: bool = False
    dump_graph: bool = False
    diagnostic_eq4: bool = False
    euclidean_stages: tuple[int, ...] = ()
    csv: bool = False


def _emit_error(kind: str, message: str, code: int) -> None:
    payload = {"error": kind, "exit_code": code, "message": str(message)}
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # noqa: D102 - argparse hook
        _emit_error("ConfigError", message, 2)
        raise SystemExit(2)


def _stage_list(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma-separated stage numbers, got {text!r}"
        ) from None
    if any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("stage numbers are 1-based")
    return values


def _build_parser() -> _Parser:
    p = _Parser(prog="sevq", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    specs = {
        "train": "train a codec on a feature matrix",
        "encode": "tokenize a feature matrix with a trained model",
        "decode": "reconstruct features from tokens",
        "compare": "train and score against the k-means residual baseline",
    }
    for name, help_text in specs.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--features", default="features.csv", help="feature matrix path (default: %(default)s)")
        sp.add_argument("--model", default="model.json", help="model path (default: %(default)s)")
        sp.add_argument("--tokens", default="tokens.csv", help="token path (default: %(default)s)")
        sp.add_argument("--output", default="decoded.csv", help="reconstruction path (default: %(default)s)")
        sp.add_argument("--reference", default=None, help="reference features for decode distortion (default: none)")
        sp.add_argument("--report", default=None, help="report path (default: derived from the main output)")
        sp.add_argument("--format", dest="fmt", default=None, choices=["csv", "f32", "raw-f32", "json"], help="feature format override (default: by extension)")
        sp.add_argument("--tau", type=float, default=0.2, help="cosine edge threshold (default: %(default)s)")
        sp.add_argument("--subset-n", type=int, default=1024, help="clusters per partial-partition chunk (default: %(default)s)")
        sp.add_argument("--stages", type=int, default=8, help="residual stages (default: %(default)s)")
        sp.add_argument("--anchors-per-cluster", type=int, default=64, help="stored anchors per cluster (default: %(default)s)")
        sp.add_argument("--max-nodes", type=int, default=10000, help="training row cap (default: %(default)s)")
        sp.add_argument("--seed", type=int, default=0, help="seed for all randomness (default: %(default)s)")
        sp.add_argument("--disentangle", action="store_true", help="apply codeword disentanglement after each stage")
        sp.add_argument("--dump-graph", action="store_true", help="write the stage-1 training graph edge list")
        sp.add_argument("--diagnostic-eq4", action="store_true", help="report the four-term closed form against the direct delta")
        sp.add_argument("--euclidean-stages", type=_stage_list, default=(), help="1-based stages forced to nearest-centroid assignment (comma-separated)")
        sp.add_argument("--csv", action="store_true", help="also write a flat key,value CSV next to the JSON report")
    return p


def _parse(argv: list[str] | None) -> RunConfig:
    ns = _build_parser().parse_args(argv)
    cfg = RunConfig(**vars(ns))
    if not 0.0 <= cfg.tau < 1.0:
        raise ConfigError(f"--tau must lie in [0, 1), got {cfg.tau}")
    if cfg.stages < 1:
        raise ConfigError(f"--stages must be at least 1, got {cfg.stages}")
    if cfg.subset_n < 2:
        raise ConfigError(f"--subset-n must be at least 2, got {cfg.subset_n}")
    if cfg.anchors_per_cluster < 1:
        raise ConfigError(
            f"--anchors-per-cluster must be at least 1, got {cfg.anchors_per_cluster}"
        )
    if cfg.max_nodes < 2:
        raise ConfigError(f"--max-nodes must be at least 2, got {cfg.max_nodes}")
    return cfg


def _config_echo(cfg: RunConfig) -> dict:
    echo = dataclasses.asdict(cfg)
    echo["euclidean_stages"] = list(cfg.euclidean_stages)
    return echo


def _default_report(cfg: RunConfig) -> str:
    if cfg.report is not None:
        return cfg.report
    anchor = {
        "train": cfg.model,
        "encode": cfg.tokens,
        "decode": cfg.output,
        "compare": "compare",
    }[cfg.command]
    return f"{anchor}.report.json" if cfg.command != "compare" else "compare.json"


def _flatten(value, prefix: str, out: dict) -> None:
    if isinstance(value, dict):
        for k in sorted(value):
            _flatten(value[k], f"{prefix}.{k}" if prefix else str(k), out)
    elif isinstance(value, (list, tuple)):
        for i, v in enumerate(value):
            _flatten(v, f"{prefix}.{i}", out)
    else:
        out[prefix] = value


def _write_report(cfg: RunConfig, report: dict) -> str:
    path = _default_report(cfg)
    with open(path, "w", encoding="ascii") as fh:
        json.dump(report, fh, sort_keys=True, indent=1)
    if cfg.csv:
        flat: dict = {}
        _flatten({k: v for k, v in report.items() if k != "timing"}, "", flat)
        lines = ["key,value"] + [f"{k},{flat[k]}" for k in sorted(flat)]
        base, _ = os.path.splitext(path)
        with open(base + ".csv", "w", encoding="ascii") as fh:
            fh.write("\n".join(lines))
    return path


def _train_config(cfg: RunConfig) -> TrainConfig:
    return TrainConfig(
        tau=cfg.tau,
        subset_n=cfg.subset_n,
        anchors_per_cluster=cfg.anchors_per_cluster,
        seed=cfg.seed,
        disentangle=cfg.disentangle,
    )


def _subsample_rows(X: np.ndarray, cap: int, rng: np.random.Generator) -> np.ndarray:
    if X.shape[0] <= cap:
        return X
    idx = np.sort(rng.choice(X.shape[0], size=cap, replace=False))
    return X[idx]


def _maybe_dump_graph(cfg: RunConfig, X: np.ndarray) -> str | None:
    if not cfg.dump_graph:
        return None
    active = X[np.linalg.norm(X, axis=1) > 0.0]
    G = build_graph(active, cfg.tau)
    path = f"{cfg.model}.graph.csv"
    dump_edges_csv(G, path)
    return path


def cmd_train(cfg: RunConfig) -> dict:
    t0 = time.perf_counter()
    X = load_features(cfg.features, cfg.fmt)
    rng = np.random.default_rng(cfg.seed)
    Xt = _subsample_rows(X, cfg.max_nodes, rng)
    t1 = time.perf_counter()
    model = train_codec(Xt, cfg.stages, _train_config(cfg))
    t2 = time.perf_counter()
    save_model(model, cfg.model)
    graph_path = _maybe_dump_graph(cfg, Xt)
    report = {
        "command": "train",
        "config": _config_echo(cfg),
        "input_rows": int(X.shape[0]),
        "trained_rows": int(Xt.shape[0]),
        "model_path": cfg.model,
        "graph_path": graph_path,
        "stages_trained": model.n_stages,
        "K_per_stage": [s["K"] for s in model.config["stage_summaries"]],
        "stage_summaries": model.config["stage_summaries"],
        "truncation": model.config["truncation"],
        "timing": {
            "started_unix": time.time(),
            "load_seconds": t1 - t0,
            "train_seconds": t2 - t1,
            "total_seconds": time.perf_counter() - t0,
        },
    }
    _write_report(cfg, report)
    return report


def cmd_encode(cfg: RunConfig) -> dict:
    t0 = time.perf_counter()
    model = load_model(cfg.model)
    X = load_features(cfg.features, cfg.fmt)
    result = encode(
        model,
        X,
        euclidean_stages=set(cfg.euclidean_stages),
        eq4_diagnostics=cfg.diagnostic_eq4,
    )
    seq, diags = result if cfg.diagnostic_eq4 else (result, None)
    save_tokens(seq, cfg.tokens)
    report = {
        "command": "encode",
        "config": _config_echo(cfg),
        "frames": seq.frames,
        "stages": seq.stages,
        "stage_sizes": list(seq.stage_sizes),
        "tokens_path": cfg.tokens,
        "timing": {
            "started_unix": time.time(),
            "total_seconds": time.perf_counter() - t0,
        },
    }
    if diags is not None:
        report["eq4_diagnostics"] = diags
    _write_report(cfg, report)
    return report


def cmd_decode(cfg: RunConfig) -> dict:
    t0 = time.perf_counter()
    model = load_model(cfg.model)
    tokens = load_tokens(cfg.tokens)
    Xhat = decode(model, tokens)
    save_features(Xhat, cfg.output)
    report = {
        "command": "decode",
        "config": _config_echo(cfg),
        "frames": int(Xhat.shape[0]),
        "output_path": cfg.output,
        "timing": {
            "started_unix": time.time(),
            "total_seconds": time.perf_counter() - t0,
        },
    }
    if cfg.reference is not None:
        ref = load_features(cfg.reference, cfg.fmt)
        if ref.shape != Xhat.shape:
            raise DataError(
                f"reference shape {ref.shape} does not match reconstruction "
                f"{Xhat.shape}"
            )
        recons = stage_reconstructions(model, tokens)
        report["distortion"] = distortion_report(ref, Xhat, recons)
    _write_report(cfg, report)
    return report


def _rvq_stage_mse(X: np.ndarray, stage_centroids, tokens: np.ndarray) -> list[float]:
    out = np.zeros_like(X)
    mses = []
    for s, C in enumerate(stage_centroids):
        out = out + C[tokens[:, s]]
        mses.append(float(np.mean((X - out) ** 2)))
    return mses


def cmd_compare(cfg: RunConfig) -> dict:
    t0 = time.perf_counter()
    X = load_features(cfg.features, cfg.fmt)
    if X.shape[0] < 5:
        raise DataError("compare needs at least 5 rows to hold out a test split")
    rng = np.random.default_rng(cfg.seed)
    perm = rng.permutation(X.shape[0])
    cut = int(round(0.8 * X.shape[0]))
    cut = min(max(cut, 1), X.shape[0] - 1)
    train_idx = np.sort(perm[:cut])
    test_idx = np.sort(perm[cut:])
    Xtr = _subsample_rows(X[train_idx], cfg.max_nodes, rng)
    Xte = X[test_idx]

    t1 = time.perf_counter()
    model = train_codec(Xtr, cfg.stages, _train_config(cfg))
    t2 = time.perf_counter()
    Ks = [stage.K for stage in model.stages]
    baseline, _ = euclidean_rvq(Xtr, Ks, len(Ks), seed=cfg.seed)
    t3 = time.perf_counter()

    seq = encode(model, Xte)
    se_hat = decode(model, seq)
    se_block = distortion_report(Xte, se_hat, stage_reconstructions(model, seq))
    se_block["codebook_sizes"] = Ks

    btok = baseline.encode(Xte)
    b_hat = baseline.decode(btok)
    b_block = distortion_report(Xte, b_hat)
    b_block["stage_mse"] = _rvq_stage_mse(Xte, baseline.stage_centroids, btok)
    b_block["codebook_sizes"] = [c.shape[0] for c in baseline.stage_centroids]

    report = {
        "command": "compare",
        "config": _config_echo(cfg),
        "split": {"train_rows": int(Xtr.shape[0]), "test_rows": int(Xte.shape[0])},
        "se": se_block,
        "kmeans_rvq": b_block,
        "mse_ratio_se_over_kmeans": (
            se_block["final_mse"] / b_block["final_mse"]
            if b_block["final_mse"] > 0.0
            else None
        ),
        "timing": {
            "started_unix": time.time(),
            "se_train_seconds": t2 - t1,
            "kmeans_train_seconds": t3 - t2,
            "total_seconds": time.perf_counter() - t0,
        },
    }
    _write_report(cfg, report)
    return report


_HANDLERS = {
    "train": cmd_train,
    "encode": cmd_encode,
    "decode": cmd_decode,
    "compare": cmd_compare,
}


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = _parse(argv)
    except SystemExit as e:
        return int(e.code or 0)
    except ConfigError as e:
        _emit_error("ConfigError", str(e), 2)
        return 2
    try:
        _HANDLERS[cfg.command](cfg)
        return 0
    except ConfigError as e:
        _emit_error("ConfigError", str(e), 2)
        return 2
    except FileNotFoundError as e:
        _emit_error("ConfigError", f"input path not found: {e}", 2)
        return 2
    except DataError as e:
        _emit_error(type(e).__name__, str(e), 3)
        return 3
    except OSError as e:
        _emit_error("DataError", str(e), 3)
        return 3
    except SevqError as e:
        _emit_error(type(e).__name__, str(e), 4)
        return 4
    except Exception as e:  # noqa: BLE001 - last-resort guard for exit code 4
        _emit_error("InternalError", f"{type(e).__name__}: {e}", 4)
        return 4


if __name__ == "__main__":
    sys.exit(main())
