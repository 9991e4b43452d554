"""Readers and writers for PGM images and the binary matrix formats.

Binary layouts (all little-endian):

* ``MDSG`` signals: magic, u32 d, u32 N, then d*N f64 column-major.
* ``MDMK`` masks: magic, u32 d, u32 N, then N masks, each d bits packed
  MSB-first and padded to a byte boundary.
* ``MDDC`` representation pairs: magic, u32 d, u32 K, u32 L, then L+K
  columns of d f64 each, low-rank columns first.
"""

from __future__ import annotations

import os
import re
import struct

import numpy as np

from .synthgen import RepresentationPair


class FormatError(ValueError):
    """Malformed or truncated file."""

    def __init__(self, msg: str, offset: int | None = None):
        if offset is not None:
            msg = f"{msg} (at byte offset {offset})"
        super().__init__(msg)
        self.offset = offset


def _read(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _write(path, payload: bytes) -> None:
    with open(path, "wb") as fh:
        fh.write(payload)


def _header(buf: bytes, magic: bytes, n_dims: int):
    size = 4 + 4 * n_dims
    if len(buf) < 4 or buf[:4] != magic:
        found = buf[:4]
        raise FormatError(f"bad magic: expected {magic!r}, found {found!r}", 0)
    if len(buf) < size:
        raise FormatError(f"truncated {magic.decode()} header", len(buf))
    return struct.unpack("<" + "I" * n_dims, buf[4:size]), size


def _payload(buf: bytes, start: int, nbytes: int, what: str) -> bytes:
    end = start + nbytes
    if len(buf) < end:
        raise FormatError(f"truncated {what}: expected {nbytes} payload bytes, got {len(buf) - start}",
                          len(buf))
    if len(buf) > end:
        raise FormatError(f"trailing data after {what}", end)
    return buf[start:end]


def write_signals(path, Y: np.ndarray) -> None:
    Y = np.asarray(Y, dtype="<f8")
    d, n = Y.shape
    _write(path, b"MDSG" + struct.pack("<II", d, n) + Y.tobytes(order="F"))


def read_signals(path) -> np.ndarray:
    buf = _read(path)
    (d, n), off = _header(buf, b"MDSG", 2)
    raw = _payload(buf, off, 8 * d * n, "signal matrix")
    return np.frombuffer(raw, dtype="<f8").reshape((d, n), order="F").astype(np.float64)


def write_masks(path, masks: np.ndarray) -> None:
    masks = np.asarray(masks, dtype=bool)
    d, n = masks.shape
    packed = np.packbits(masks.T, axis=1)      # one padded row per mask
    _write(path, b"MDMK" + struct.pack("<II", d, n) + packed.tobytes())


def read_masks(path) -> np.ndarray:
    buf = _read(path)
    (d, n), off = _header(buf, b"MDMK", 2)
    row = (d + 7) // 8
    raw = _payload(buf, off, row * n, "mask batch")
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8).reshape(n, row), axis=1, count=d)
    return bits.T.astype(bool)


def write_pair(path, pair: RepresentationPair) -> None:
    cols = np.column_stack([pair.lowrank, pair.dictionary]).astype("<f8")
    _write(path, b"MDDC" + struct.pack("<III", pair.d, pair.K, pair.L) + cols.tobytes(order="F"))


def read_pair(path) -> RepresentationPair:
    buf = _read(path)
    (d, K, L), off = _header(buf, b"MDDC", 3)
    raw = _payload(buf, off, 8 * d * (K + L), "dictionary columns")
    cols = np.frombuffer(raw, dtype="<f8").reshape((d, K + L), order="F").astype(np.float64)
    return RepresentationPair(cols[:, :L].copy(), cols[:, L:].copy())


_PGM_TOKEN = re.compile(rb"(?:\s*(?:#[^\n]*\n)?)*\s*(\d+)")


def read_pgm(path) -> np.ndarray:
    """Read a binary (P5) 8-bit PGM as a ``(height, width)`` uint8 array."""
    buf = _read(path)
    if buf[:2] != b"P5":
        raise FormatError(f"unsupported image format {buf[:2]!r}; only binary PGM (P5) is read", 0)
    pos = 2
    vals = []
    for _ in range(3):
        m = _PGM_TOKEN.match(buf, pos)
        if m is None:
            raise FormatError("malformed PGM header", pos)
        vals.append(int(m.group(1)))
        pos = m.end()
    width, height, maxval = vals
    if maxval != 255:
        raise FormatError(f"unsupported PGM maxval {maxval}; only 8-bit images", pos)
    if pos >= len(buf) or not buf[pos:pos + 1].isspace():
        raise FormatError("missing whitespace after PGM header", pos)
    pos += 1
    raw = _payload(buf, pos, width * height, "PGM pixel data")
    return np.frombuffer(raw, dtype=np.uint8).reshape(height, width).copy()


def write_pgm(path, img) -> None:
    """Write an image as 8-bit P5 PGM, clamping to [0, 255] and rounding."""
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError("write_pgm expects a 2-d grayscale image")
    data = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    h, w = data.shape
    _write(path, f"P5\n{w} {h}\n255\n".encode() + data.tobytes())


def ensure_dir(path) -> None:
    os.makedirs(path, exist_ok=True)
