"""Residual multi-stage codec with entropy-based token assignment.

Stage 1 discovers a codebook on the training rows by structural entropy
minimization; each later stage repeats the procedure on the residuals
left by the previous one.  Every stage keeps a capped set of anchor
rows per cluster.  Encoding attaches a query to a stage's anchor graph
and joins the cluster whose join leaves the lowest partition entropy
(the largest entropy decrease, lowest cluster id on exact ties); a
query with no attachment edges falls back to the Euclidean-nearest
centroid.  Decoding sums the chosen centroids across stages.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .codebook import (
    Codebook,
    extract_centroids,
    fold_isolated,
    hierarchical_minimize,
)
from .entropy import Partition, one_dim_entropy, partition_se
from .errors import ConfigError, DataError
from .graph import FeatureGraph, build_graph
from .vclub import disentangle

_ASSIGN_BLOCK = 1024


@dataclass(frozen=True)
class TrainConfig:
    """Training knobs; every field has a working default."""

    tau: float = 0.2
    subset_n: int = 1024
    anchors_per_cluster: int = 64
    seed: int = 0
    disentangle: bool = False
    disentangle_steps: int = 100
    disentangle_lr: float = 0.01
    disentangle_max_samples: int = 256


@dataclass(frozen=True)
class TokenSequence:
    """Token matrix of shape (frames, stages); entry [t, s] indexes the
    stage-s codebook."""

    tokens: np.ndarray
    stage_sizes: tuple[int, ...]

    @property
    def frames(self) -> int:
        return self.tokens.shape[0]

    @property
    def stages(self) -> int:
        return self.tokens.shape[1]


@dataclass(frozen=True)
class StageModel:
    """One codec stage: emitted centroids plus the anchor graph state.

    Anchors are stored grouped by cluster label so per-cluster segment
    sums reduce over contiguous ranges.  All derived state is rebuilt
    deterministically from (centroids, anchors, anchor_labels, tau).
    """

    centroids: np.ndarray
    anchors: np.ndarray
    anchor_labels: np.ndarray
    tau: float
    anchor_graph: FeatureGraph = field(repr=False)
    partition: Partition = field(repr=False)
    group_starts: np.ndarray = field(repr=False)
    anchor_units: np.ndarray = field(repr=False)

    @property
    def K(self) -> int:
        return self.centroids.shape[0]

    @classmethod
    def build(
        cls,
        centroids: np.ndarray,
        anchors: np.ndarray,
        anchor_labels: np.ndarray,
        tau: float,
    ) -> "StageModel":
        centroids = np.asarray(centroids, dtype=np.float64)
        anchors = np.asarray(anchors, dtype=np.float64)
        anchor_labels = np.asarray(anchor_labels, dtype=np.int64)
        K = centroids.shape[0]
        if anchors.shape[0] != anchor_labels.shape[0]:
            raise DataError("anchor rows and labels must align")
        if anchor_labels.size == 0 or K < 1:
            raise DataError("a stage needs at least one cluster and one anchor")
        if anchor_labels.min() < 0 or anchor_labels.max() >= K:
            raise DataError("anchor labels must index the centroid rows")
        counts = np.bincount(anchor_labels, minlength=K)
        if np.any(counts == 0):
            raise DataError("every cluster must keep at least one anchor")
        order = np.argsort(anchor_labels, kind="stable")
        anchors = anchors[order]
        anchor_labels = anchor_labels[order]
        group_starts = np.concatenate([[0], np.cumsum(counts)])
        graph = build_graph(anchors, tau)
        partition = Partition.from_labels(graph, anchor_labels)
        units = anchors / np.linalg.norm(anchors, axis=1)[:, None]
        return cls(
            centroids=centroids,
            anchors=anchors,
            anchor_labels=anchor_labels,
            tau=float(tau),
            anchor_graph=graph,
            partition=partition,
            group_starts=group_starts,
            anchor_units=units,
        )


@dataclass(frozen=True)
class CodecModel:
    """Trained residual codec: stage list plus a config echo."""

    stages: tuple[StageModel, ...]
    feature_dim: int
    config: dict

    @property
    def n_stages(self) -> int:
        return len(self.stages)


def _nearest_centroid(R: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d2 = (
        np.sum(R * R, axis=1)[:, None]
        - 2.0 * R @ centroids.T
        + np.sum(centroids * centroids, axis=1)[None, :]
    )
    return np.argmin(d2, axis=1)


def _stage_assign(
    stage: StageModel, R: np.ndarray, euclidean: bool = False, collect_eq4: bool = False
) -> tuple[np.ndarray, dict | None]:
    """Vectorized token assignment for a block-iterated frame matrix."""
    T = R.shape[0]
    tokens = np.empty(T, dtype=np.int64)
    diag = (
        {
            "queries": 0,
            "candidate_cells": 0,
            "argmax_agreement": 0,
            "argmin_agreement": 0,
            "sum_abs_diff": 0.0,
            "max_abs_diff": 0.0,
        }
        if collect_eq4
        else None
    )
    vols = stage.partition.vols
    cuts = stage.partition.cuts
    V = stage.anchor_graph.volume
    starts = stage.group_starts[:-1]
    tau = stage.tau
    for a in range(0, T, _ASSIGN_BLOCK):
        b = min(a + _ASSIGN_BLOCK, T)
        block = R[a:b]
        if euclidean:
            tokens[a:b] = _nearest_centroid(block, stage.centroids)
            continue
        norms = np.linalg.norm(block, axis=1)
        sims = np.zeros((b - a, stage.anchors.shape[0]))
        nz = norms > 0.0
        if np.any(nz):
            sims[nz] = (block[nz] / norms[nz, None]) @ stage.anchor_units.T
        mask = (sims >= tau) & (sims > 0.0)
        wsims = np.where(mask, sims, 0.0)
        dx = wsims.sum(axis=1)
        W = np.add.reduceat(wsims, starts, axis=1)
        cand = np.add.reduceat(mask.astype(np.float64), starts, axis=1) > 0.0
        dxc = dx[:, None]
        Vp = V + 2.0 * dxc
        Vs = vols[None, :] + W
        gs = cuts[None, :] + W
        Vj = Vs + dxc
        gj = np.maximum(cuts[None, :] + dxc - W, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            delta = (
                -(dxc / Vp) * np.log2(Vj / Vp)
                - (Vs / Vp) * np.log2(Vj / Vs)
                - np.where(gs > 0.0, (gs / Vp) * np.log2(np.where(Vs > 0, Vs, 1.0) / Vp), 0.0)
                + np.where(gj > 0.0, (gj / Vp) * np.log2(Vj / Vp), 0.0)
            )
        delta = np.where(cand, delta, -np.inf)
        block_tokens = np.argmax(delta, axis=1)
        fallback = ~cand.any(axis=1)
        if np.any(fallback):
            block_tokens[fallback] = _nearest_centroid(
                block[fallback], stage.centroids
            )
        tokens[a:b] = block_tokens
        if diag is not None:
            se_rows = np.flatnonzero(~fallback)
            if se_rows.size:
                with np.errstate(divide="ignore", invalid="ignore"):
                    printed = (
                        -np.where(gs > 0.0, (gs / Vp) * np.log2(np.where(Vs > 0, Vs, 1.0) / Vp), 0.0)
                        + np.where(gj > 0.0, (gj / Vp) * np.log2(Vj / Vp), 0.0)
                        - np.where(gj > 0.0, (gj / Vp) * np.log2(Vj / np.where(Vs > 0, Vs, 1.0)), 0.0)
                        - (dxc / Vp) * np.log2(Vp / np.where(Vs > 0, Vs, 1.0))
                    )
                pr = np.where(cand, printed, np.nan)[se_rows]
                dl = np.where(cand, delta, np.nan)[se_rows]
                chosen = block_tokens[se_rows]
                pr_max = np.nanargmax(pr, axis=1)
                pr_min = np.nanargmin(pr, axis=1)
                diag["queries"] += int(se_rows.size)
                diag["argmax_agreement"] += int(np.sum(pr_max == chosen))
                diag["argmin_agreement"] += int(np.sum(pr_min == chosen))
                diffs = np.abs(pr - dl)
                finite = np.isfinite(diffs)
                diag["candidate_cells"] += int(finite.sum())
                diag["sum_abs_diff"] += float(np.nansum(np.where(finite, diffs, 0.0)))
                if finite.any():
                    diag["max_abs_diff"] = max(
                        diag["max_abs_diff"], float(np.nanmax(diffs))
                    )
    return tokens, diag


def assign(stage: StageModel, x: np.ndarray) -> int:
    """Token for one query vector against one stage."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != stage.anchors.shape[1]:
        raise DataError(
            f"query has dimension {x.shape[0]}, stage expects {stage.anchors.shape[1]}"
        )
    if not np.all(np.isfinite(x)):
        raise DataError("non-finite query value")
    tokens, _ = _stage_assign(stage, x[None, :])
    return int(tokens[0])


def train_codec(X: np.ndarray, stages: int = 8, cfg: TrainConfig | None = None) -> CodecModel:
    """Train a residual codec of up to ``stages`` stages.

    Training rows whose residual is exactly zero sit out of the graph of
    later stages; if fewer than two nonzero residual rows remain, or the
    residual graph has no edges at all, training stops early with fewer
    stages and records the reason in the config echo.  A stage-1 graph
    without any edge is an input error (the threshold admits nothing).
    """
    cfg = cfg or TrainConfig()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError("training needs a 2-d matrix with at least 2 rows")
    if not np.all(np.isfinite(X)):
        raise DataError("non-finite training value")
    if stages < 1:
        raise ConfigError(f"stage count must be at least 1, got {stages}")

    R = X.copy()
    built: list[StageModel] = []
    summaries: list[dict] = []
    truncation: str | None = None
    for s in range(stages):
        active = np.flatnonzero(np.linalg.norm(R, axis=1) > 0.0)
        if active.size < 2:
            truncation = f"residual collapse before stage {s + 1}"
            break
        Ra = R[active]
        G = build_graph(Ra, cfg.tau)
        if G.volume <= 0.0:
            if s == 0:
                raise DataError(
                    "no similarity reaches the threshold at stage 1; lower tau"
                )
            truncation = f"degenerate residual graph before stage {s + 1}"
            break
        se_before = one_dim_entropy(G)
        P = hierarchical_minimize(G, cfg.subset_n)
        P = fold_isolated(G, P, Ra)
        se_after = partition_se(G, P)
        cb = extract_centroids(P, Ra)
        centroids = cb.centroids
        if cfg.disentangle and cb.K >= 2:
            samples = [Ra[P.labels == k] for k in range(P.K)]
            cb2 = disentangle(
                cb,
                samples,
                steps=cfg.disentangle_steps,
                lr=cfg.disentangle_lr,
                seed=cfg.seed,
                max_samples=cfg.disentangle_max_samples,
            )
            centroids = cb2.centroids
        anchor_idx, anchor_labels = _select_anchors(
            P, Ra, cb.centroids, cfg.anchors_per_cluster
        )
        stage = StageModel.build(centroids, Ra[anchor_idx], anchor_labels, cfg.tau)
        built.append(stage)
        summaries.append(
            {
                "stage": s + 1,
                "rows": int(R.shape[0]),
                "active_rows": int(active.size),
                "K": int(P.K),
                "anchors": int(anchor_idx.size),
                "se_before": float(se_before),
                "se_after": float(se_after),
            }
        )
        R[active] = Ra - centroids[P.labels]
    if not built:
        raise DataError("no stage could be trained: " + (truncation or "unknown"))
    config = dataclasses.asdict(cfg)
    config.update(
        {
            "stages_requested": int(stages),
            "stages_trained": len(built),
            "truncation": truncation,
            "stage_summaries": summaries,
        }
    )
    return CodecModel(stages=tuple(built), feature_dim=int(X.shape[1]), config=config)


def _select_anchors(
    P: Partition, X: np.ndarray, centroids: np.ndarray, cap: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per cluster, the members most cosine-similar to the raw centroid.

    Stable ordering: similarity descending, then member row ascending.
    """
    if cap < 1:
        raise ConfigError(f"anchors per cluster must be at least 1, got {cap}")
    Xn = X / np.linalg.norm(X, axis=1)[:, None]
    idx_parts: list[np.ndarray] = []
    lab_parts: list[np.ndarray] = []
    for k in range(P.K):
        members = P.members(k)
        c = centroids[k]
        cn = np.linalg.norm(c)
        if cn == 0.0:
            sims = np.zeros(members.shape[0])
        else:
            sims = Xn[members] @ (c / cn)
        order = np.argsort(-sims, kind="stable")[:cap]
        chosen = members[order]
        idx_parts.append(chosen)
        lab_parts.append(np.full(chosen.shape[0], k, dtype=np.int64))
    return np.concatenate(idx_parts), np.concatenate(lab_parts)


def encode(
    model: CodecModel,
    X: np.ndarray,
    euclidean_stages: frozenset[int] | set[int] = frozenset(),
    eq4_diagnostics: bool = False,
) -> TokenSequence | tuple[TokenSequence, list[dict]]:
    """Tokenize frames stage by stage, subtracting chosen centroids.

    ``euclidean_stages`` lists 1-based stage numbers that should use the
    Euclidean-nearest rule instead of the entropy rule (an ablation
    switch).  With ``eq4_diagnostics`` a per-stage report compares the
    normative entropy delta against the literal four-term closed form.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.feature_dim:
        raise DataError(
            f"features must have shape (T, {model.feature_dim}), got {X.shape}"
        )
    if not np.all(np.isfinite(X)):
        raise DataError("non-finite feature value")
    R = X.copy()
    S = model.n_stages
    tokens = np.empty((X.shape[0], S), dtype=np.int64)
    diags: list[dict] = []
    for s, stage in enumerate(model.stages):
        t, d = _stage_assign(
            stage,
            R,
            euclidean=(s + 1) in euclidean_stages,
            collect_eq4=eq4_diagnostics,
        )
        tokens[:, s] = t
        R -= stage.centroids[t]
        if d is not None:
            d["stage"] = s + 1
            if d["queries"]:
                d["mean_abs_diff"] = d["sum_abs_diff"] / max(d["candidate_cells"], 1)
            diags.append(d)
    seq = TokenSequence(tokens=tokens, stage_sizes=tuple(st.K for st in model.stages))
    return (seq, diags) if eq4_diagnostics else seq


def decode(model: CodecModel, tokens: TokenSequence | np.ndarray) -> np.ndarray:
    """Reconstruction as the sum of per-stage centroids."""
    t = tokens.tokens if isinstance(tokens, TokenSequence) else np.asarray(tokens)
    if t.ndim != 2 or t.shape[1] != model.n_stages:
        raise DataError(
            f"tokens must have shape (T, {model.n_stages}), got {t.shape}"
        )
    out = np.zeros((t.shape[0], model.feature_dim))
    for s, stage in enumerate(model.stages):
        col = t[:, s]
        bad = np.flatnonzero((col < 0) | (col >= stage.K))
        if bad.size:
            raise DataError(
                f"token {int(col[bad[0]])} at frame {int(bad[0])}, stage {s + 1} "
                f"is outside [0, {stage.K})"
            )
        out += stage.centroids[col]
    return out


def stage_reconstructions(
    model: CodecModel, tokens: TokenSequence | np.ndarray
) -> list[np.ndarray]:
    """Prefix reconstructions using the first 1..S stages."""
    t = tokens.tokens if isinstance(tokens, TokenSequence) else np.asarray(tokens)
    out = np.zeros((t.shape[0], model.feature_dim))
    prefixes = []
    for s, stage in enumerate(model.stages):
        out = out + stage.centroids[t[:, s]]
        prefixes.append(out.copy())
    return prefixes


def distortion_report(
    X: np.ndarray, Xhat: np.ndarray, stage_recons: list[np.ndarray] | None = None
) -> dict:
    """MSE, mean cosine, and per-dimension RMSE between X and Xhat."""
    X = np.asarray(X, dtype=np.float64)
    Xhat = np.asarray(Xhat, dtype=np.float64)
    if X.shape != Xhat.shape:
        raise DataError(f"shape mismatch: {X.shape} vs {Xhat.shape}")
    diff = X - Xhat
    nx = np.linalg.norm(X, axis=1)
    ny = np.linalg.norm(Xhat, axis=1)
    both = (nx > 0) & (ny > 0)
    cos = np.zeros(X.shape[0])
    cos[both] = np.sum(X[both] * Xhat[both], axis=1) / (nx[both] * ny[both])
    cos[(nx == 0) & (ny == 0)] = 1.0
    report = {
        "final_mse": float(np.mean(diff * diff)),
        "mean_cosine": float(np.mean(cos)),
        "rmse_per_dim": np.sqrt(np.mean(diff * diff, axis=0)).tolist(),
    }
    if stage_recons is not None:
        report["stage_mse"] = [
            float(np.mean((X - r) ** 2)) for r in stage_recons
        ]
    return report
