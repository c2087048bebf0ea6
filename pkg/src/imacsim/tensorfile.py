"""Portable named-tensor container.

Layout (all integers little-endian):

    magic   6 bytes   b"NTENS1"
    count   uint32    number of tensors
    then per tensor:
      name_len  uint16
      name      name_len bytes, UTF-8
      dtype     uint8   index into DTYPES
      ndim      uint8
      shape     ndim * uint32
      payload   prod(shape) * itemsize bytes, little-endian, C order

The format is self-contained and byte-stable: writing the same mapping
twice produces identical files, which the determinism tests rely on.
"""

from __future__ import annotations

import struct
from typing import Mapping

import numpy as np

from .errors import FormatError

MAGIC = b"NTENS1"

DTYPES = ("<f4", "<f8", "|i1", "<i2", "<i4", "<i8", "|u1")
_DTYPE_INDEX = {np.dtype(d): i for i, d in enumerate(DTYPES)}


def save_tensors(path: str, tensors: Mapping[str, np.ndarray]) -> None:
    """Write a name -> array mapping; insertion order is preserved."""
    chunks = [MAGIC, struct.pack("<I", len(tensors))]
    for name, arr in tensors.items():
        arr = np.asarray(arr)  # ascontiguousarray would promote 0-d to 1-d
        dt = arr.dtype.newbyteorder("<") if arr.dtype.byteorder == ">" else arr.dtype
        key = np.dtype(dt)
        if key not in _DTYPE_INDEX:
            raise FormatError(f"tensor {name!r}: unsupported dtype {arr.dtype}")
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise FormatError(f"tensor name too long ({len(encoded)} bytes)")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<BB", _DTYPE_INDEX[key], arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.astype(key, copy=False).tobytes(order="C"))
    with open(path, "wb") as fh:
        fh.write(b"".join(chunks))


def load_tensors(path: str) -> dict[str, np.ndarray]:
    """Read a container written by save_tensors."""
    # Access problems propagate as plain OSError; FormatError below means
    # the file was readable but its content does not parse.
    with open(path, "rb") as fh:
        blob = fh.read()

    def need(offset: int, n: int, what: str) -> bytes:
        if offset + n > len(blob):
            raise FormatError(
                f"{path}: truncated while reading {what} at byte {offset}"
            )
        return blob[offset : offset + n]

    if need(0, len(MAGIC), "magic") != MAGIC:
        raise FormatError(f"{path}: bad magic, not a tensor container")
    pos = len(MAGIC)
    (count,) = struct.unpack("<I", need(pos, 4, "tensor count"))
    pos += 4
    out: dict[str, np.ndarray] = {}
    for i in range(count):
        (name_len,) = struct.unpack("<H", need(pos, 2, f"name length #{i}"))
        pos += 2
        name = need(pos, name_len, f"name #{i}").decode("utf-8")
        pos += name_len
        dtype_idx, ndim = struct.unpack("<BB", need(pos, 2, f"header of {name!r}"))
        pos += 2
        if dtype_idx >= len(DTYPES):
            raise FormatError(f"{path}: tensor {name!r} has unknown dtype id {dtype_idx}")
        shape = struct.unpack(f"<{ndim}I", need(pos, 4 * ndim, f"shape of {name!r}"))
        pos += 4 * ndim
        dt = np.dtype(DTYPES[dtype_idx])
        n_bytes = int(np.prod(shape, dtype=np.int64)) * dt.itemsize
        payload = need(pos, n_bytes, f"payload of {name!r}")
        pos += n_bytes
        out[name] = np.frombuffer(payload, dtype=dt).reshape(shape).copy()
    return out
