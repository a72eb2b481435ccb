"""Binary matrix container for offline inspection of operator matrices.

Layout (little-endian): 4-byte magic ``NCGF``, u32 format version, u64 rows,
u64 cols, then rows*cols complex entries in row-major order as interleaved
f64 (re, im) pairs.
"""

from __future__ import annotations

import struct

import numpy as np

__all__ = ["save_matrix", "load_matrix", "MAGIC", "FORMAT_VERSION"]

MAGIC = b"NCGF"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQQ")


def save_matrix(path, m: np.ndarray) -> None:
    m = np.atleast_2d(np.asarray(m, dtype=np.complex128))
    if m.ndim != 2:
        raise ValueError("only 2-D matrices are supported")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, m.shape[0], m.shape[1]))
        interleaved = np.empty((m.shape[0], m.shape[1], 2), dtype="<f8")
        interleaved[..., 0] = m.real
        interleaved[..., 1] = m.imag
        fh.write(interleaved.tobytes())


def load_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise ValueError("truncated matrix file")
        magic, version, rows, cols = _HEADER.unpack(header)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported format version {version}")
        raw = np.frombuffer(fh.read(rows * cols * 16), dtype="<f8")
        if raw.size != rows * cols * 2:
            raise ValueError("truncated matrix payload")
    pairs = raw.reshape(rows, cols, 2)
    return (pairs[..., 0] + 1j * pairs[..., 1]).astype(np.complex128)
