"""Unit tests for the on-disk archive format."""

import struct

import numpy as np
import pytest

from spectral_huber.archive import (
    MAGIC,
    load_problem,
    problem_digest,
    read_byte_array,
    read_complex_array,
    read_meta,
    save_problem,
    write_byte_array,
    write_complex_array,
    write_meta,
)
from spectral_huber.exceptions import DimensionMismatch
from spectral_huber.model import generate_synthetic

from conftest import random_complex


def test_complex_array_roundtrip(rng, tmp_path):
    arr = random_complex(rng, 3, 4, 2)
    path = tmp_path / "arr"
    write_complex_array(path, arr)
    back = read_complex_array(path)
    assert back.shape == (3, 4, 2)
    assert np.array_equal(back, arr)


def test_complex_array_byte_layout(rng, tmp_path):
    arr = np.array([[[1.5 + 2.5j]], [[-3.0 + 0.25j]]])
    path = tmp_path / "arr"
    write_complex_array(path, arr)
    raw = path.read_bytes()
    assert raw[:4] == MAGIC
    assert struct.unpack("<III", raw[4:16]) == (2, 1, 1)
    floats = struct.unpack("<4d", raw[16:48])
    assert floats == (1.5, 2.5, -3.0, 0.25)


def test_complex_array_rejects_non_3d(tmp_path):
    with pytest.raises(DimensionMismatch):
        write_complex_array(tmp_path / "arr", np.zeros((2, 2)))


def test_complex_array_bad_magic(tmp_path):
    path = tmp_path / "arr"
    path.write_bytes(b"JUNK" + b"\x00" * 20)
    with pytest.raises(ValueError):
        read_complex_array(path)


def test_complex_array_truncated(rng, tmp_path):
    path = tmp_path / "arr"
    write_complex_array(path, random_complex(rng, 3, 3, 1))
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        read_complex_array(path)


def test_byte_array_roundtrip(rng, tmp_path):
    arr = (rng.random((4, 4, 3)) < 0.5).astype(np.uint8)
    path = tmp_path / "masks"
    write_byte_array(path, arr)
    assert np.array_equal(read_byte_array(path), arr)


def test_meta_roundtrip(tmp_path):
    meta = {"m_x": 8, "sigma": 0.01, "name": "demo", "lam": 2.5}
    path = tmp_path / "meta"
    write_meta(path, meta)
    back = read_meta(path)
    assert back == meta
    assert isinstance(back["m_x"], int)
    assert isinstance(back["sigma"], float)
    assert isinstance(back["name"], str)


def test_problem_roundtrip(rng, tmp_path):
    P = generate_synthetic(seed=9, m_x=8, m_y=8, n_frames=4, n_coils=2, accel=2.0,
                           lam=0.3)
    save_problem(tmp_path / "prob", P)
    Q = load_problem(tmp_path / "prob")
    assert np.array_equal(Q.Y, P.Y)
    assert np.array_equal(Q.truth, P.truth)
    assert np.array_equal(Q.operator.coils, P.operator.coils)
    assert np.array_equal(Q.operator.masks, P.operator.masks)
    assert Q.geom == P.geom
    assert Q.lam == pytest.approx(0.3)
    assert Q.info["seed"] == 9
    # operators agree as linear maps
    X = random_complex(rng, *P.operator.shape_in)
    assert np.allclose(Q.operator.apply(X), P.operator.apply(X), atol=1e-13)


def test_problem_roundtrip_without_truth(tmp_path):
    P = generate_synthetic(seed=9, m_x=8, m_y=8, n_frames=4, n_coils=2, accel=2.0)
    P.truth = None
    save_problem(tmp_path / "prob", P)
    Q = load_problem(tmp_path / "prob")
    assert Q.truth is None


def test_problem_digest_stable_and_sensitive(tmp_path):
    P = generate_synthetic(seed=9, m_x=8, m_y=8, n_frames=4, n_coils=2, accel=2.0)
    save_problem(tmp_path / "a", P)
    save_problem(tmp_path / "b", P)
    assert problem_digest(tmp_path / "a") == problem_digest(tmp_path / "b")
    Q = generate_synthetic(seed=10, m_x=8, m_y=8, n_frames=4, n_coils=2, accel=2.0)
    save_problem(tmp_path / "c", Q)
    assert problem_digest(tmp_path / "a") != problem_digest(tmp_path / "c")
