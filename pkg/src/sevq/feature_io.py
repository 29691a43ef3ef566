"""File formats: feature matrices, codec models, token sequences.

Features travel as CSV (optional leading ``#`` comment lines) or as raw
little-endian float32, row-major, with a mandatory JSON sidecar at
``<path>.json`` declaring ``{"rows": T, "cols": H}``.  Models are a
single JSON document whose floats round-trip exactly through ``repr``.
Tokens travel as CSV (one frame per line) or JSON.  Every loader
validates shape and finiteness and reports offending coordinates.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import ConfigError, DataError, ModelFormatError
from .quantizer import CodecModel, StageModel, TokenSequence

MODEL_FORMAT_VERSION = 1

_FMT_ALIASES = {
    "csv": "csv",
    "f32": "f32",
    "raw-f32": "f32",
    "json": "json",
}


def _resolve_format(path: str, fmt: str | None, allowed: tuple[str, ...]) -> str:
    if fmt is not None:
        key = _FMT_ALIASES.get(str(fmt).lower())
        if key is None or key not in allowed:
            raise ConfigError(f"unknown format {fmt!r}; expected one of {allowed}")
        return key
    ext = os.path.splitext(path)[1].lower().lstrip(".")
    key = _FMT_ALIASES.get(ext)
    if key is None or key not in allowed:
        raise ConfigError(
            f"cannot infer format from {path!r}; pass one of {allowed} explicitly"
        )
    return key


def _check_finite(X: np.ndarray, what: str) -> np.ndarray:
    bad = np.argwhere(~np.isfinite(X))
    if bad.size:
        r, c = bad[0]
        raise DataError(f"non-finite {what} value at row {r}, column {c}")
    return X


def load_features(path: str, fmt: str | None = None) -> np.ndarray:
    """Load a (T, H) float64 feature matrix from CSV or raw float32."""
    fmt = _resolve_format(path, fmt, ("csv", "f32"))
    if fmt == "csv":
        return _load_features_csv(path)
    return _load_features_f32(path)


def _load_features_csv(path: str) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    rows: list[list[float]] = []
    cols = -1
    for line in lines:
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cells = line.split(",")
        i = len(rows)
        if cols < 0:
            cols = len(cells)
        elif len(cells) != cols:
            raise DataError(f"row {i} has {len(cells)} columns, expected {cols}")
        parsed = []
        for j, cell in enumerate(cells):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise DataError(
                    f"non-numeric cell at row {i}, column {j}: {cell.strip()!r}"
                ) from None
        rows.append(parsed)
    if not rows:
        raise DataError(f"no data rows in {path}")
    X = np.asarray(rows, dtype=np.float64)
    return _check_finite(X, "feature")


def _sidecar_path(path: str) -> str:
    return path + ".json"


def _load_features_f32(path: str) -> np.ndarray:
    side = _sidecar_path(path)
    if not os.path.exists(side):
        raise FileNotFoundError(side)
    with open(side, "r", encoding="utf-8") as fh:
        try:
            meta = json.load(fh)
        except json.JSONDecodeError as e:
            raise DataError(f"sidecar {side} is not valid JSON: {e}") from None
    if not isinstance(meta, dict) or "rows" not in meta or "cols" not in meta:
        raise DataError(f'sidecar {side} must declare {{"rows": T, "cols": H}}')
    rows, cols = meta["rows"], meta["cols"]
    if not isinstance(rows, int) or not isinstance(cols, int) or rows < 1 or cols < 1:
        raise DataError(f"sidecar {side} declares invalid shape ({rows}, {cols})")
    raw = open(path, "rb").read()
    need = rows * cols * 4
    if len(raw) != need:
        raise DataError(
            f"{path} holds {len(raw)} bytes but sidecar shape ({rows}, {cols}) "
            f"requires {need}"
        )
    X = np.frombuffer(raw, dtype="<f4").reshape(rows, cols).astype(np.float64)
    return _check_finite(X, "feature")


def save_features(X: np.ndarray, path: str, fmt: str | None = None) -> None:
    """Write a feature matrix; the f32 form emits the sidecar too."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise DataError(f"feature matrix must be 2-d and non-empty, got shape {X.shape}")
    _check_finite(X, "feature")
    fmt = _resolve_format(path, fmt, ("csv", "f32"))
    if fmt == "csv":
        lines = [",".join(repr(float(v)) for v in row) for row in X]
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines))
        return
    with open(path, "wb") as fh:
        fh.write(np.ascontiguousarray(X, dtype="<f4").tobytes())
    with open(_sidecar_path(path), "w", encoding="ascii") as fh:
        json.dump({"rows": int(X.shape[0]), "cols": int(X.shape[1])}, fh)


def save_model(model: CodecModel, path: str) -> None:
    """Serialize a codec model as a sorted-key JSON document."""
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "feature_dim": int(model.feature_dim),
        "config": model.config,
        "stages": [
            {
                "centroids": stage.centroids.tolist(),
                "anchors": stage.anchors.tolist(),
                "anchor_labels": stage.anchor_labels.tolist(),
                "tau": float(stage.tau),
            }
            for stage in model.stages
        ],
    }
    with open(path, "w", encoding="ascii") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_model(path: str) -> CodecModel:
    """Rebuild a codec model, rejecting corrupt or newer-version files."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"corrupt model file {path}: {e}") from None
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise ModelFormatError(f"corrupt model file {path}: no format_version field")
    version = doc["format_version"]
    if version != MODEL_FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format_version {version}; "
            f"this build reads version {MODEL_FORMAT_VERSION}"
        )
    try:
        feature_dim = int(doc["feature_dim"])
        stage_docs = doc["stages"]
        config = doc["config"]
        stages = tuple(
            StageModel.build(
                np.asarray(sd["centroids"], dtype=np.float64),
                np.asarray(sd["anchors"], dtype=np.float64),
                np.asarray(sd["anchor_labels"], dtype=np.int64),
                float(sd["tau"]),
            )
            for sd in stage_docs
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"corrupt model file {path}: {e}") from None
    if not stages:
        raise ModelFormatError(f"corrupt model file {path}: no stages")
    return CodecModel(stages=stages, feature_dim=feature_dim, config=config)


def _token_matrix(tokens: TokenSequence | np.ndarray) -> np.ndarray:
    t = tokens.tokens if isinstance(tokens, TokenSequence) else np.asarray(tokens)
    if t.ndim != 2 or t.shape[0] < 1 or t.shape[1] < 1:
        raise DataError(
            f"token matrix must be (T >= 1, S >= 1), got shape {tuple(t.shape)}"
        )
    if not np.issubdtype(t.dtype, np.integer):
        raise DataError(f"tokens must be integers, got dtype {t.dtype}")
    return t.astype(np.int64)


def save_tokens(
    tokens: TokenSequence | np.ndarray, path: str, fmt: str | None = None
) -> None:
    """Write the (T, S) token matrix as CSV lines or a JSON document."""
    t = _token_matrix(tokens)
    fmt = _resolve_format(path, fmt, ("csv", "json"))
    if fmt == "csv":
        lines = [",".join(str(int(v)) for v in row) for row in t]
        with open(path, "w", encoding="ascii") as fh:
            fh.write("\n".join(lines))
        return
    with open(path, "w", encoding="ascii") as fh:
        json.dump({"tokens": t.tolist()}, fh, sort_keys=True)


def load_tokens(path: str, fmt: str | None = None) -> np.ndarray:
    """Load a (T, S) int64 token matrix."""
    fmt = _resolve_format(path, fmt, ("csv", "json"))
    if fmt == "json":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as e:
                raise DataError(f"corrupt token file {path}: {e}") from None
        if not isinstance(doc, dict) or "tokens" not in doc:
            raise DataError(f'token file {path} must hold {{"tokens": [[...]]}}')
        try:
            arr = np.asarray(doc["tokens"])
        except ValueError:
            raise DataError(
                f"token file {path} must hold a rectangular integer matrix"
            ) from None
        if arr.ndim != 2 or arr.dtype.kind not in "iu":
            raise DataError(f"token file {path} must hold a rectangular integer matrix")
        return _token_matrix(arr)
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    rows: list[list[int]] = []
    cols = -1
    for line in lines:
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cells = line.split(",")
        i = len(rows)
        if cols < 0:
            cols = len(cells)
        elif len(cells) != cols:
            raise DataError(f"row {i} has {len(cells)} columns, expected {cols}")
        parsed = []
        for j, cell in enumerate(cells):
            try:
                parsed.append(int(cell))
            except ValueError:
                raise DataError(
                    f"non-integer token at row {i}, column {j}: {cell.strip()!r}"
                ) from None
        rows.append(parsed)
    if not rows:
        raise DataError(f"no token rows in {path}")
    return _token_matrix(np.asarray(rows, dtype=np.int64))
