"""Vectorized LEB128 varints for non-negative integer arrays."""
from __future__ import annotations

import numpy as np

from .errors import BundleFormatError, BundleTruncatedError


def encode(values) -> bytes:
    values = np.asarray(values)
    if values.size == 0:
        return b""
    if values.dtype.kind == "i" and values.min() < 0:
        raise ValueError("varints must be non-negative")
    values = values.astype(np.uint64)
    nbytes = np.ones(values.shape, dtype=np.int64)
    rest = values >> np.uint64(7)
    while rest.any():
        nbytes += rest > 0
        rest >>= np.uint64(7)
    pos = np.cumsum(nbytes) - nbytes
    out = np.zeros(int(nbytes.sum()), dtype=np.uint8)
    for k in range(int(nbytes.max())):
        sel = nbytes > k
        chunk = (values[sel] >> np.uint64(7 * k)) & np.uint64(0x7F)
        chunk |= np.where(nbytes[sel] > k + 1, np.uint64(0x80), np.uint64(0))
        out[pos[sel] + k] = chunk.astype(np.uint8)
    return out.tobytes()


def decode(buf, count: int, start: int = 0):
    """Decode ``count`` varints from ``buf[start:]``; returns (values, end)."""
    if count == 0:
        return np.zeros(0, dtype=np.int64), start
    data = np.frombuffer(buf, dtype=np.uint8, offset=start)
    # a varint never exceeds 10 bytes, so this window always suffices
    window = data[: count * 10]
    ends = np.flatnonzero(window < 0x80)[:count]
    if len(ends) < count:
        raise BundleTruncatedError(f"expected {count} varints, found {len(ends)}")
    begins = np.empty_like(ends)
    begins[0] = 0
    begins[1:] = ends[:-1] + 1
    lengths = ends - begins + 1
    if lengths.max() > 9:
        raise BundleFormatError("varint longer than 63 bits")
    values = np.zeros(count, dtype=np.uint64)
    for k in range(int(lengths.max())):
        sel = lengths > k
        values[sel] |= (window[begins[sel] + k].astype(np.uint64) & np.uint64(0x7F)) << np.uint64(7 * k)
    return values.astype(np.int64), start + int(ends[-1]) + 1
