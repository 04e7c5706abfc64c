"""SGAM binary mask files.

Layout (all integers little-endian)::

    magic   4 bytes  b"SGAM"
    version uint32   1
    n       uint32   token count
    dtype   uint8    0 = hard, 1 = soft
    payload          hard: n rows of ceil(n/8) bytes, bits MSB-first,
                           zero padding at the end of each row
                     soft: n*n float32, row-major

Soft weights are narrowed to float32 on write, so a float64 mask read
back may differ by up to about 6e-8 per entry.
"""

from __future__ import annotations

import struct
from os import PathLike
from typing import Union

import numpy as np

from .errors import MaskFormatError
from .localrange import LocalRangeMask
from .softmask import SoftMask

__all__ = ["MAGIC", "VERSION", "HARD", "SOFT", "encode_mask", "decode_mask", "write_mask", "read_mask"]

MAGIC = b"SGAM"
VERSION = 1
HARD = 0
SOFT = 1
_HEADER = struct.Struct("<4sIIB")

Mask = Union[LocalRangeMask, SoftMask]


def encode_mask(mask: Mask) -> bytes:
    if isinstance(mask, LocalRangeMask):
        payload = np.packbits(mask.bits, axis=1, bitorder="big").tobytes()
        dtype = HARD
    elif isinstance(mask, SoftMask):
        payload = np.ascontiguousarray(mask.weights, dtype="<f4").tobytes()
        dtype = SOFT
    else:
        raise TypeError(f"cannot encode {type(mask).__name__}")
    return _HEADER.pack(MAGIC, VERSION, mask.n, dtype) + payload


def decode_mask(data: bytes) -> Mask:
    if len(data) < _HEADER.size:
        raise MaskFormatError(f"file is {len(data)} bytes, shorter than the header")
    magic, version, n, dtype = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise MaskFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise MaskFormatError(f"unsupported version {version}")
    payload = data[_HEADER.size :]
    if dtype == HARD:
        row_bytes = (n + 7) // 8
        if len(payload) != n * row_bytes:
            raise MaskFormatError(f"hard payload is {len(payload)} bytes, expected {n * row_bytes}")
        packed = np.frombuffer(payload, dtype=np.uint8).reshape(n, row_bytes)
        bits = np.unpackbits(packed, axis=1, bitorder="big")
        if bits[:, n:].any():
            raise MaskFormatError("nonzero padding bits")
        return LocalRangeMask(bits[:, :n].astype(bool))
    if dtype == SOFT:
        if len(payload) != 4 * n * n:
            raise MaskFormatError(f"soft payload is {len(payload)} bytes, expected {4 * n * n}")
        weights = np.frombuffer(payload, dtype="<f4").reshape(n, n).astype(np.float64)
        return SoftMask(weights)
    raise MaskFormatError(f"unknown dtype {dtype}")


def write_mask(path: str | PathLike, mask: Mask) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_mask(mask))


def read_mask(path: str | PathLike) -> Mask:
    with open(path, "rb") as fh:
        return decode_mask(fh.read())
