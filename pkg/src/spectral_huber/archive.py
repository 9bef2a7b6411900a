"""On-disk problem archives.

An archive is a directory holding a text ``meta`` file (``key = value``
per line) and raw array files with a 16-byte header: the magic bytes
``CMPX`` followed by three little-endian u32 fields (rows, cols,
depth).  Complex arrays store little-endian float64 (real, imag) pairs
in row-major order; mask arrays store one byte per entry after the
same header.

Files: ``truth`` (M x N x 1), ``coils`` (m_x x m_y x C), ``masks``
(m_x x m_y x N, bytes), ``kspace`` (S x N x 1).
"""

from __future__ import annotations

import hashlib
import os
import struct

import numpy as np

from .exceptions import DimensionMismatch
from .llr import PatchGeometry
from .model import MriOperator, ReconstructionProblem

MAGIC = b"CMPX"
_HEADER = struct.Struct("<III")
ARRAY_FILES = ("truth", "coils", "masks", "kspace")


def _write_header(fh, shape):
    rows, cols, depth = shape
    fh.write(MAGIC)
    fh.write(_HEADER.pack(rows, cols, depth))


def _read_header(fh, path):
    magic = fh.read(4)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    return _HEADER.unpack(fh.read(_HEADER.size))


def write_complex_array(path, arr: np.ndarray):
    """Write a 3-d complex array as headered (real, imag) float64 pairs."""
    arr = np.ascontiguousarray(arr, dtype=complex)
    if arr.ndim != 3:
        raise DimensionMismatch("archive arrays are 3-d")
    flat = arr.ravel()
    buf = np.empty(flat.size * 2, dtype="<f8")
    buf[0::2] = flat.real
    buf[1::2] = flat.imag
    with open(path, "wb") as fh:
        _write_header(fh, arr.shape)
        buf.tofile(fh)


def read_complex_array(path) -> np.ndarray:
    with open(path, "rb") as fh:
        shape = _read_header(fh, path)
        buf = np.fromfile(fh, dtype="<f8", count=2 * int(np.prod(shape)))
    if buf.size != 2 * int(np.prod(shape)):
        raise ValueError(f"{path}: truncated payload")
    return (buf[0::2] + 1j * buf[1::2]).reshape(shape)


def write_byte_array(path, arr: np.ndarray):
    """Write a 3-d byte array (masks) with the same header."""
    arr = np.ascontiguousarray(arr, dtype=np.uint8)
    if arr.ndim != 3:
        raise DimensionMismatch("archive arrays are 3-d")
    with open(path, "wb") as fh:
        _write_header(fh, arr.shape)
        arr.tofile(fh)


def read_byte_array(path) -> np.ndarray:
    with open(path, "rb") as fh:
        shape = _read_header(fh, path)
        buf = np.fromfile(fh, dtype=np.uint8, count=int(np.prod(shape)))
    if buf.size != int(np.prod(shape)):
        raise ValueError(f"{path}: truncated payload")
    return buf.reshape(shape)


def write_meta(path, meta: dict):
    with open(path, "w") as fh:
        for key in sorted(meta):
            fh.write(f"{key} = {meta[key]!r}\n")


def read_meta(path) -> dict:
    meta = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            meta[key.strip()] = _parse_value(value.strip())
    return meta


def _parse_value(text: str):
    if text.startswith("'") and text.endswith("'"):
        return text[1:-1]
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    return text


def save_problem(path, problem: ReconstructionProblem):
    """Write a problem to an archive directory; overwrites existing files."""
    op = problem.operator
    if not isinstance(op, MriOperator):
        raise ValueError("only masked Fourier problems can be archived")
    os.makedirs(path, exist_ok=True)
    geom = problem.geom
    meta = {
        "m_x": op.m_x,
        "m_y": op.m_y,
        "n_frames": int(problem.Y.shape[1]),
        "n_coils": op.n_coils,
        "patch_x": geom.n_x,
        "patch_y": geom.n_y,
    }
    for key in ("seed", "sigma", "acceleration", "rank"):
        if key in problem.info:
            meta[key] = problem.info[key]
    if problem.lam is not None:
        meta["lam"] = float(problem.lam)
    write_meta(os.path.join(path, "meta"), meta)
    if problem.truth is not None:
        write_complex_array(os.path.join(path, "truth"), problem.truth[:, :, None])
    write_complex_array(
        os.path.join(path, "coils"), op.coils.transpose(1, 2, 0)
    )
    write_byte_array(
        os.path.join(path, "masks"), op.masks.transpose(1, 2, 0).astype(np.uint8)
    )
    write_complex_array(os.path.join(path, "kspace"), problem.Y[:, :, None])


def load_problem(path) -> ReconstructionProblem:
    meta = read_meta(os.path.join(path, "meta"))
    coils = read_complex_array(os.path.join(path, "coils")).transpose(2, 0, 1)
    masks = read_byte_array(os.path.join(path, "masks")).transpose(2, 0, 1)
    Y = read_complex_array(os.path.join(path, "kspace"))[:, :, 0]
    truth_path = os.path.join(path, "truth")
    truth = (
        read_complex_array(truth_path)[:, :, 0] if os.path.exists(truth_path) else None
    )
    geom = PatchGeometry(meta["m_x"], meta["m_y"], meta["patch_x"], meta["patch_y"])
    op = MriOperator(coils, masks)
    info = {k: meta[k] for k in ("seed", "sigma", "acceleration", "rank") if k in meta}
    return ReconstructionProblem(
        operator=op,
        Y=Y,
        geom=geom,
        truth=truth,
        lam=meta.get("lam"),
        info=info,
    )


def problem_digest(path) -> str:
    """Stable content hash of an archive, for matching runs to problems."""
    h = hashlib.sha256()
    for name in ARRAY_FILES + ("meta",):
        fpath = os.path.join(path, name)
        if not os.path.exists(fpath):
            continue
        h.update(name.encode())
        with open(fpath, "rb") as fh:
            h.update(fh.read())
    return h.hexdigest()
