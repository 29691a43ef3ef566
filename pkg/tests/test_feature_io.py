"""Feature, model, and token file formats."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from sevq.errors import ConfigError, DataError, ModelFormatError
from sevq.feature_io import (
    load_features,
    load_model,
    load_tokens,
    save_features,
    save_model,
    save_tokens,
)
from sevq.quantizer import TrainConfig, encode, train_codec

from .conftest import mixture_features


finite64 = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=30, deadline=None)
@given(
    hnp.arrays(
        np.float64,
        st.tuples(st.integers(1, 6), st.integers(1, 4)),
        elements=finite64,
    )
)
def test_csv_roundtrip_bit_exact(tmp_path_factory, X):
    path = str(tmp_path_factory.mktemp("io") / "x.csv")
    save_features(X, path)
    back = load_features(path)
    assert back.shape == X.shape
    assert np.array_equal(back, X)


def test_csv_comments_and_blanks(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("# header\n\n1,0\n0,1\n")
    assert np.array_equal(load_features(str(p)), np.eye(2))


def test_csv_ragged_row(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("1,2\n3")
    with pytest.raises(DataError, match="row 1 has 1 columns, expected 2"):
        load_features(str(p))


def test_csv_non_numeric_cell(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("1,oops")
    with pytest.raises(DataError, match="row 0, column 1"):
        load_features(str(p))


@pytest.mark.parametrize("bad", ["nan", "inf", "-inf"])
def test_csv_non_finite(tmp_path, bad):
    p = tmp_path / "x.csv"
    p.write_text(f"1,{bad}")
    with pytest.raises(DataError, match="row 0, column 1"):
        load_features(str(p))


def test_csv_no_rows(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("# nothing here\n")
    with pytest.raises(DataError, match="no data rows"):
        load_features(str(p))


def test_f32_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((7, 3)).astype(np.float32).astype(np.float64)
    p = str(tmp_path / "x.f32")
    save_features(X, p)
    assert np.array_equal(load_features(p), X)
    meta = json.loads((tmp_path / "x.f32.json").read_text())
    assert meta == {"rows": 7, "cols": 3}


def test_f32_sidecar_shape_check(tmp_path):
    p = tmp_path / "x.f32"
    p.write_bytes(np.zeros(2, dtype="<f4").tobytes())
    (tmp_path / "x.f32.json").write_text('{"rows": 1, "cols": 2}')
    assert load_features(str(p)).shape == (1, 2)
    (tmp_path / "x.f32.json").write_text('{"rows": 2, "cols": 2}')
    with pytest.raises(DataError, match=r"holds 8 bytes but sidecar shape \(2, 2\) requires 16"):
        load_features(str(p))


def test_f32_sidecar_missing(tmp_path):
    p = tmp_path / "x.f32"
    p.write_bytes(b"\x00" * 8)
    with pytest.raises(FileNotFoundError):
        load_features(str(p))


def test_f32_sidecar_invalid(tmp_path):
    p = tmp_path / "x.f32"
    p.write_bytes(b"\x00" * 8)
    side = tmp_path / "x.f32.json"
    side.write_text("not json")
    with pytest.raises(DataError, match="not valid JSON"):
        load_features(str(p))
    side.write_text('{"rows": 0, "cols": 2}')
    with pytest.raises(DataError, match="invalid shape"):
        load_features(str(p))
    side.write_text('{"cols": 2}')
    with pytest.raises(DataError, match="must declare"):
        load_features(str(p))


def test_format_resolution(tmp_path):
    X = np.eye(2)
    with pytest.raises(ConfigError, match="cannot infer"):
        save_features(X, str(tmp_path / "x.dat"))
    with pytest.raises(ConfigError, match="unknown format"):
        save_features(X, str(tmp_path / "x.csv"), fmt="parquet")
    p = str(tmp_path / "x.dat")
    save_features(X, p, fmt="raw-f32")
    assert np.array_equal(load_features(p, fmt="f32"), X)


def test_save_features_validation(tmp_path):
    with pytest.raises(DataError):
        save_features(np.zeros(3), str(tmp_path / "x.csv"))
    with pytest.raises(DataError):
        save_features(np.zeros((0, 2)), str(tmp_path / "x.csv"))
    with pytest.raises(DataError):
        save_features(np.array([[np.inf]]), str(tmp_path / "x.csv"))


def _small_model():
    X = mixture_features(per_component=30)
    return X, train_codec(X, stages=2, cfg=TrainConfig(anchors_per_cluster=8))


def test_model_roundtrip_preserves_encoding(tmp_path):
    X, model = _small_model()
    p = str(tmp_path / "model.json")
    save_model(model, p)
    before = open(p, "rb").read()
    loaded = load_model(p)
    assert open(p, "rb").read() == before
    assert loaded.feature_dim == model.feature_dim
    assert loaded.config == model.config
    for a, b in zip(model.stages, loaded.stages):
        assert np.array_equal(a.centroids, b.centroids)
        assert np.array_equal(a.anchors, b.anchors)
        assert np.array_equal(a.anchor_labels, b.anchor_labels)
    assert np.array_equal(encode(model, X).tokens, encode(loaded, X).tokens)


def test_model_truncated_is_corrupt(tmp_path):
    _, model = _small_model()
    p = tmp_path / "model.json"
    save_model(model, str(p))
    data = p.read_bytes()
    p.write_bytes(data[: len(data) // 2])
    with pytest.raises(ModelFormatError, match="corrupt"):
        load_model(str(p))


def test_model_version_checks(tmp_path):
    p = tmp_path / "model.json"
    p.write_text('{"stages": []}')
    with pytest.raises(ModelFormatError, match="no format_version"):
        load_model(str(p))
    p.write_text('{"format_version": 2, "stages": []}')
    with pytest.raises(ModelFormatError, match="unsupported model format_version 2"):
        load_model(str(p))


def test_model_payload_checks(tmp_path):
    p = tmp_path / "model.json"
    doc = {"format_version": 1, "feature_dim": 2, "config": {}, "stages": []}
    p.write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError, match="no stages"):
        load_model(str(p))
    doc["stages"] = [{"centroids": [[1.0, 0.0]]}]
    p.write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError, match="corrupt"):
        load_model(str(p))


def test_tokens_csv_exact_bytes(tmp_path):
    p = tmp_path / "t.csv"
    save_tokens(np.array([[3, 1], [0, 2]]), str(p))
    assert p.read_bytes() == b"3,1\n0,2"
    assert np.array_equal(load_tokens(str(p)), np.array([[3, 1], [0, 2]]))


def test_tokens_json_roundtrip(tmp_path):
    p = str(tmp_path / "t.json")
    t = np.array([[0, 4], [2, 1], [2, 2]])
    save_tokens(t, p)
    assert np.array_equal(load_tokens(p), t)
    assert json.loads(open(p).read()) == {"tokens": [[0, 4], [2, 1], [2, 2]]}


def test_tokens_validation(tmp_path):
    with pytest.raises(DataError):
        save_tokens(np.zeros((0, 1), dtype=np.int64), str(tmp_path / "t.csv"))
    with pytest.raises(DataError, match="integers"):
        save_tokens(np.zeros((2, 2)), str(tmp_path / "t.csv"))
    p = tmp_path / "t.csv"
    p.write_text("1,2\n3,x")
    with pytest.raises(DataError, match="row 1, column 1"):
        load_tokens(str(p))
    q = tmp_path / "t.json"
    q.write_text('{"frames": []}')
    with pytest.raises(DataError, match="tokens"):
        load_tokens(str(q))
    q.write_text('{"tokens": [[1], [2, 3]]}')
    with pytest.raises(DataError, match="rectangular"):
        load_tokens(str(q))


def test_tokens_csv_empty(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("\n")
    with pytest.raises(DataError, match="no token rows"):
        load_tokens(str(p))
