import json

import numpy as np
import pytest

from viskern.field import Dims, StructuredField, gen_sphere_field
from viskern.io import (
    DatasetFormatError,
    DatasetSizeError,
    load_field,
    raw_path_for,
    save_field,
)


def write_pair(tmp_path, desc, raw_bytes, name="data.json"):
    p = tmp_path / name
    p.write_text(json.dumps(desc))
    raw_path_for(p).write_bytes(raw_bytes)
    return p


def test_load_2x2_example(tmp_path):
    desc = {"dims": [2, 2, 1], "components": 1, "dtype": "f32",
            "origin": [0, 0, 0], "spacing": [1, 1, 1]}
    raw = np.array([1, 2, 3, 4], dtype="<f4").tobytes()
    f = load_field(write_pair(tmp_path, desc, raw))
    assert f.values.tolist() == [1.0, 2.0, 3.0, 4.0]
    assert f.dims == Dims(2, 2, 1)


def test_size_mismatch(tmp_path):
    desc = {"dims": [2, 2, 1], "components": 1, "dtype": "f32"}
    raw = np.array([1, 2, 3, 4], dtype="<f4").tobytes()[:-1]
    with pytest.raises(DatasetSizeError):
        load_field(write_pair(tmp_path, desc, raw))


def test_bad_dtype(tmp_path):
    desc = {"dims": [1, 1, 1], "components": 1, "dtype": "f64"}
    with pytest.raises(DatasetFormatError):
        load_field(write_pair(tmp_path, desc, b"\0" * 8))


def test_missing_files(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_field(tmp_path / "absent.json")
    p = tmp_path / "solo.json"
    p.write_text(json.dumps({"dims": [1, 1, 1], "components": 1, "dtype": "f32"}))
    with pytest.raises(FileNotFoundError):
        load_field(p)


def test_malformed_descriptor(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(DatasetFormatError):
        load_field(p)
    for desc in ({"components": 1, "dtype": "f32"},
                 {"dims": [2, 2, 1], "dtype": "f32"},
                 {"dims": [2, 2, 1], "components": 2, "dtype": "f32"},
                 {"dims": [2, 0, 1], "components": 1, "dtype": "f32"}):
        with pytest.raises(DatasetFormatError):
            load_field(write_pair(tmp_path, desc, b"\0" * 16))


def test_roundtrip_scalar(tmp_path):
    f = gen_sphere_field(Dims(6, 5, 4), (2.0, 2.0, 1.5), 1.75)
    loaded = load_field(save_field(f, tmp_path / "sphere.json"))
    assert loaded.dims == f.dims
    assert loaded.components == f.components
    assert loaded.origin == f.origin and loaded.spacing == f.spacing
    assert np.array_equal(loaded.values, f.values)


def test_roundtrip_vector_with_geometry(tmp_path):
    rng = np.random.default_rng(2)
    f = StructuredField(Dims(3, 4, 5), rng.random(3 * 4 * 5 * 3, dtype=np.float32),
                        components=3, origin=(-1.0, 2.0, 0.5),
                        spacing=(0.5, 0.25, 2.0))
    loaded = load_field(save_field(f, tmp_path / "vec.json"))
    assert loaded.components == 3
    assert loaded.origin == f.origin and loaded.spacing == f.spacing
    assert np.array_equal(loaded.values, f.values)


def test_raw_payload_is_exact_bytes(tmp_path):
    f = StructuredField(Dims(2, 1, 1), np.array([1.5, -2.0], dtype=np.float32))
    save_field(f, tmp_path / "tiny.json")
    raw = raw_path_for(tmp_path / "tiny.json").read_bytes()
    assert raw == np.array([1.5, -2.0], dtype="<f4").tobytes()
    assert len(raw) == 8
