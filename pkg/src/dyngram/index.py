"""Per-n reverse indexes from n-gram fingerprints to (pdf, offset) postings.

Each :class:`NGramIndex` keeps its distinct keys as an ``(U, n)`` uint64
array ordered by a 64-bit mixing hash, with CSR-style pointers into flat
posting arrays.  The hash only orders the table for binary search; every
lookup is confirmed against the full key, so distinct n-grams never merge.
"""
from __future__ import annotations

import hashlib
import json
import logging
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import _varint
from .errors import (
    BundleChecksumError,
    BundleFormatError,
    BundleTruncatedError,
    BundleVersionError,
    IndexAbsentError,
    UsageError,
)
from .model import BootlegScore, CorpusManifest, FingerprintKey

log = logging.getLogger(__name__)

MAGIC = b"DNGRAMIX"
BUNDLE_VERSION = 1
DEFAULT_N_MAX = 4
MAX_N = 5
DEFAULT_GAMMA = 1000

_HEADER = struct.Struct("<8sHQ")  # magic, version, total file length
_SECTION = struct.Struct("<IQQQ")  # n, keys, postings, varint blob length
_DIGEST = 32

__all__ = [
    "DEFAULT_GAMMA",
    "DEFAULT_N_MAX",
    "MAX_N",
    "IndexBundle",
    "NGramIndex",
    "Posting",
    "build_bundle",
    "build_index",
    "corpus_checksum",
    "hash_keys",
    "load_bundle",
    "save_bundle",
]


@dataclass(frozen=True, order=True)
class Posting:
    pdf_id: int
    offset: int


_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = 0x9E3779B97F4A7C15


def _mix(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> np.uint64(30))
    x = x * _M1
    x = x ^ (x >> np.uint64(27))
    x = x * _M2
    return x ^ (x >> np.uint64(31))


def hash_keys(keys: np.ndarray) -> np.ndarray:
    """64-bit hash of each row of an ``(m, n)`` uint64 key array."""
    keys = np.asarray(keys, dtype=np.uint64)
    seed = (keys.shape[1] * _GOLDEN) & 0xFFFFFFFFFFFFFFFF
    h = np.full(keys.shape[0], seed, dtype=np.uint64)
    for j in range(keys.shape[1]):
        h = _mix(h ^ keys[:, j])
    return h


class NGramIndex:
    """Reverse index for a single n.

    ``pdf_ids`` is the sorted array of corpus pdf ids; postings refer to pdfs
    by their position in it, so that sorting by position sorts by id.
    """

    def __init__(self, n, keys, key_hash, ptr, post_pdf, post_off, pdf_ids):
        self.n = int(n)
        self.keys = keys
        self.key_hash = key_hash
        self.ptr = ptr
        self.post_pdf = post_pdf
        self.post_off = post_off
        self.pdf_ids = pdf_ids
        for arr in (keys, key_hash, ptr, post_pdf, post_off, pdf_ids):
            arr.flags.writeable = False

    def __repr__(self):
        return f"NGramIndex(n={self.n}, keys={self.n_keys}, postings={self.n_postings})"

    @property
    def n_keys(self) -> int:
        return len(self.key_hash)

    @property
    def n_postings(self) -> int:
        return len(self.post_off)

    @property
    def counts(self) -> np.ndarray:
        """Posting-list length per distinct key, in table order."""
        return np.diff(self.ptr)

    def find_rows(self, queries: np.ndarray) -> np.ndarray:
        """Table row for each row of an ``(m, n)`` key array, or -1 if absent."""
        queries = np.asarray(queries, dtype=np.uint64).reshape(-1, self.n)
        m = len(queries)
        rows = np.full(m, -1, dtype=np.int64)
        if m == 0 or self.n_keys == 0:
            return rows
        qh = hash_keys(queries)
        lo = np.searchsorted(self.key_hash, qh, side="left")
        hi = np.searchsorted(self.key_hash, qh, side="right")
        found = lo < hi
        cand = np.where(found, lo, 0)
        exact = found & np.all(self.keys[cand] == queries, axis=1)
        rows[exact] = cand[exact]
        # several distinct keys sharing one hash value
        for i in np.flatnonzero(found & ~exact & (hi - lo > 1)):
            for r in range(lo[i] + 1, hi[i]):
                if np.array_equal(self.keys[r], queries[i]):
                    rows[i] = r
                    break
        return rows

    def row_counts(self, rows: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        if self.n_keys == 0:
            return np.zeros(rows.shape, dtype=np.int64)
        safe = np.where(rows >= 0, rows, 0)
        return np.where(rows >= 0, self.ptr[safe + 1] - self.ptr[safe], 0)

    def _key_array(self, key) -> np.ndarray:
        words = key.words if isinstance(key, FingerprintKey) else tuple(key)
        if len(words) != self.n:
            raise UsageError(f"{len(words)}-word key used on the {self.n}-gram index")
        return np.array([words], dtype=np.uint64)

    def lookup(self, key) -> list[Posting]:
        row = int(self.find_rows(self._key_array(key))[0])
        if row < 0:
            return []
        sl = slice(self.ptr[row], self.ptr[row + 1])
        return [
            Posting(int(self.pdf_ids[p]), int(o))
            for p, o in zip(self.post_pdf[sl], self.post_off[sl])
        ]

    def count(self, key) -> int:
        return int(self.row_counts(self.find_rows(self._key_array(key)))[0])

    def items(self):
        """Yield ``(FingerprintKey, postings)`` in table order."""
        for row in range(self.n_keys):
            sl = slice(self.ptr[row], self.ptr[row + 1])
            yield FingerprintKey(tuple(self.keys[row])), [
                Posting(int(self.pdf_ids[p]), int(o))
                for p, o in zip(self.post_pdf[sl], self.post_off[sl])
            ]

    def __eq__(self, other):
        if not isinstance(other, NGramIndex):
            return NotImplemented
        return self.n == other.n and all(
            np.array_equal(a, b)
            for a, b in [
                (self.keys, other.keys),
                (self.ptr, other.ptr),
                (self.post_pdf, other.post_pdf),
                (self.post_off, other.post_off),
                (self.pdf_ids, other.pdf_ids),
            ]
        )

    __hash__ = None


def _windows(scores, positions, n):
    """Stack every n-word window of the given scores with its (pdf, offset)."""
    keys, pdfs, offs = [], [], []
    for score, pos in zip(scores, positions):
        count = len(score.words) - n + 1
        if count <= 0:
            continue
        keys.append(sliding_window_view(score.words, n))
        pdfs.append(np.full(count, pos, dtype=np.int32))
        offs.append(np.arange(count, dtype=np.int32))
    if not keys:
        return (np.zeros((0, n), np.uint64), np.zeros(0, np.int32), np.zeros(0, np.int32))
    return np.concatenate(keys), np.concatenate(pdfs), np.concatenate(offs)


def build_index(corpus: Sequence[BootlegScore], n: int, threads: int = 1) -> NGramIndex:
    """Index every n-gram (stride 1) of every score in ``corpus``."""
    if n < 1:
        raise UsageError(f"n must be >= 1, got {n}")
    corpus = list(corpus)
    pdf_ids = np.array(sorted(s.pdf_id for s in corpus), dtype=np.int64)
    if len(np.unique(pdf_ids)) != len(pdf_ids):
        raise UsageError("duplicate pdf ids in corpus")
    positions = np.searchsorted(pdf_ids, [s.pdf_id for s in corpus])

    shards = max(1, min(threads, len(corpus)))
    if shards > 1:
        bounds = np.linspace(0, len(corpus), shards + 1).astype(int)
        with ThreadPoolExecutor(shards) as pool:
            parts = list(pool.map(
                lambda ab: _windows(corpus[ab[0]:ab[1]], positions[ab[0]:ab[1]], n),
                zip(bounds[:-1], bounds[1:]),
            ))
        keys = np.concatenate([p[0] for p in parts])
        pdf = np.concatenate([p[1] for p in parts])
        off = np.concatenate([p[2] for p in parts])
    else:
        keys, pdf, off = _windows(corpus, positions, n)

    # total order over (hash, key words, pdf, offset): independent of shard order
    h = hash_keys(keys)
    order = np.lexsort((off, pdf) + tuple(keys[:, j] for j in reversed(range(n))) + (h,))
    keys, h, pdf, off = keys[order], h[order], pdf[order], off[order]
    if len(h):
        new = np.ones(len(h), dtype=bool)
        new[1:] = (h[1:] != h[:-1]) | np.any(keys[1:] != keys[:-1], axis=1)
        starts = np.flatnonzero(new)
    else:
        starts = np.zeros(0, dtype=np.int64)
    ptr = np.append(starts, len(h)).astype(np.int64)
    return NGramIndex(n, np.ascontiguousarray(keys[starts]), h[starts], ptr,
                      np.ascontiguousarray(pdf), np.ascontiguousarray(off), pdf_ids)


def corpus_checksum(corpus: Iterable[BootlegScore]) -> str:
    digest = hashlib.sha256()
    for score in sorted(corpus, key=lambda s: s.pdf_id):
        digest.update(struct.pack("<qQ", score.pdf_id, len(score.words)))
        digest.update(np.ascontiguousarray(score.words, dtype="<u8").tobytes())
    return digest.hexdigest()


@dataclass
class IndexBundle:
    """The n = 1..n_max indexes of one corpus plus its manifest snapshot."""

    indexes: dict[int, NGramIndex]
    manifest: CorpusManifest
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        pdf_ids = np.array(sorted(self.manifest.pdf_ids), dtype=np.int64)
        piece_ids = np.array(sorted(self.manifest.piece_ids), dtype=np.int64)
        self.pdf_ids = pdf_ids
        self.piece_ids = piece_ids
        self._corpus = None
        self.pdf_piece = np.searchsorted(
            piece_ids, [self.manifest.piece_of(int(p)) for p in pdf_ids]
        ).astype(np.int64)
        for idx in self.indexes.values():
            if not np.array_equal(idx.pdf_ids, pdf_ids):
                raise UsageError("index pdf ids do not match the manifest")

    @property
    def n_max(self) -> int:
        return int(self.params.get("n_max", max(self.indexes, default=0)))

    @property
    def ns(self) -> list[int]:
        return sorted(self.indexes)

    def index(self, n: int) -> NGramIndex:
        try:
            return self.indexes[n]
        except KeyError:
            raise IndexAbsentError(
                f"index absent: no {n}-gram index in bundle (built with n = {self.ns})"
            ) from None

    def pdf_position(self, pdf_id: int) -> int:
        pos = int(np.searchsorted(self.pdf_ids, pdf_id))
        if pos >= len(self.pdf_ids) or self.pdf_ids[pos] != pdf_id:
            raise UsageError(f"unknown pdf id {pdf_id}")
        return pos

    def piece_position(self, piece_id: int) -> int:
        pos = int(np.searchsorted(self.piece_ids, piece_id))
        if pos >= len(self.piece_ids) or self.piece_ids[pos] != piece_id:
            raise UsageError(f"unknown piece id {piece_id}")
        return pos

    def corpus(self) -> list[BootlegScore]:
        """Every PDF's word sequence (rebuilt from the 1-gram index, cached)."""
        if self._corpus is None:
            self._corpus = self._rebuild_corpus()
        return self._corpus

    def pdf_words(self, pdf_id: int) -> np.ndarray:
        return self.corpus()[self.pdf_position(pdf_id)].words

    def _rebuild_corpus(self) -> list[BootlegScore]:
        one = self.index(1)
        lengths = np.zeros(len(self.pdf_ids), dtype=np.int64)
        np.maximum.at(lengths, one.post_pdf, one.post_off.astype(np.int64) + 1)
        base = np.cumsum(lengths) - lengths
        flat = np.zeros(int(lengths.sum()), dtype=np.uint64)
        row_of_posting = np.repeat(np.arange(one.n_keys), one.counts)
        flat[base[one.post_pdf] + one.post_off] = one.keys[row_of_posting, 0]
        words = np.split(flat, np.cumsum(lengths)[:-1]) if len(lengths) else []
        return [BootlegScore(int(p), w) for p, w in zip(self.pdf_ids, words)]

    def summary(self) -> dict:
        return {
            "pieces": len(self.piece_ids),
            "pdfs": len(self.pdf_ids),
            "words": int(self.indexes[1].n_postings) if 1 in self.indexes else None,
            "postings": {n: self.indexes[n].n_postings for n in self.ns},
            "keys": {n: self.indexes[n].n_keys for n in self.ns},
        }

    def same_as(self, other: "IndexBundle") -> bool:
        return (
            self.ns == other.ns
            and all(self.indexes[n] == other.indexes[n] for n in self.ns)
            and self.manifest == other.manifest
            and self.params == other.params
        )


def build_bundle(corpus: Sequence[BootlegScore], n_max: int = DEFAULT_N_MAX,
                 manifest: CorpusManifest | None = None,
                 gamma_default: int = DEFAULT_GAMMA, threads: int = 1) -> IndexBundle:
    """Build indexes n = 1..n_max over one corpus snapshot."""
    if not 1 <= n_max <= MAX_N:
        raise UsageError(f"n_max must be in 1..{MAX_N}, got {n_max}")
    corpus = list(corpus)
    if manifest is None:
        manifest = CorpusManifest.simple(s.pdf_id for s in corpus)
    if sorted(s.pdf_id for s in corpus) != sorted(manifest.pdf_ids):
        raise UsageError("corpus pdf ids do not match the manifest")
    indexes = {}
    for n in range(1, n_max + 1):
        indexes[n] = build_index(corpus, n, threads=threads)
        log.info("built %r", indexes[n])
    params = {
        "n_max": n_max,
        "gamma_default": int(gamma_default),
        "corpus_checksum": corpus_checksum(corpus),
    }
    return IndexBundle(indexes, manifest, params)


def save_bundle(bundle: IndexBundle, path) -> None:
    """Write ``bundle`` in the binary bundle format (see README)."""
    meta = json.dumps(
        {"params": bundle.params, "manifest": bundle.manifest.to_dict()},
        sort_keys=True, separators=(",", ":"),
    ).encode()
    parts = [struct.pack("<I", len(meta)), meta, struct.pack("<I", len(bundle.ns))]
    for n in bundle.ns:
        idx = bundle.indexes[n]
        blob = (_varint.encode(idx.counts) + _varint.encode(idx.post_pdf)
                + _varint.encode(idx.post_off))
        parts.append(_SECTION.pack(n, idx.n_keys, idx.n_postings, len(blob)))
        parts.append(np.ascontiguousarray(idx.keys, dtype="<u8").tobytes())
        parts.append(blob)
    body = b"".join(parts)
    total = _HEADER.size + len(body) + _DIGEST
    head = _HEADER.pack(MAGIC, BUNDLE_VERSION, total)
    digest = hashlib.sha256(head + body).digest()
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(head)
        fh.write(body)
        fh.write(digest)
    tmp.replace(path)


class _Reader:
    def __init__(self, buf, pos):
        self.buf = buf
        self.pos = pos

    def take(self, size):
        if self.pos + size > len(self.buf):
            raise BundleTruncatedError("bundle section runs past end of file")
        chunk = self.buf[self.pos:self.pos + size]
        self.pos += size
        return chunk

    def unpack(self, st):
        return st.unpack(self.take(st.size))


def load_bundle(path) -> IndexBundle:
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) or data[:len(MAGIC)] != MAGIC:
        raise BundleFormatError(f"{path}: not a bundle file (bad magic bytes)")
    if len(data) < _HEADER.size:
        raise BundleTruncatedError(f"{path}: truncated header")
    _, version, total = _HEADER.unpack_from(data)
    if version != BUNDLE_VERSION:
        raise BundleVersionError(f"{path}: bundle version {version}, expected {BUNDLE_VERSION}")
    if len(data) < total:
        raise BundleTruncatedError(f"{path}: {len(data)} bytes, header declares {total}")
    if len(data) > total:
        raise BundleFormatError(f"{path}: {len(data) - total} trailing bytes after bundle")
    if hashlib.sha256(data[:-_DIGEST]).digest() != data[-_DIGEST:]:
        raise BundleChecksumError(f"{path}: checksum mismatch")

    body = memoryview(data)[:-_DIGEST]
    rd = _Reader(body, _HEADER.size)
    (meta_len,) = rd.unpack(struct.Struct("<I"))
    try:
        meta = json.loads(bytes(rd.take(meta_len)))
        manifest = CorpusManifest.from_dict(meta["manifest"])
        params = meta["params"]
    except (ValueError, KeyError, TypeError) as exc:
        raise BundleFormatError(f"{path}: bad metadata block ({exc})") from None
    pdf_ids = np.array(sorted(manifest.pdf_ids), dtype=np.int64)
    (count,) = rd.unpack(struct.Struct("<I"))
    indexes = {}
    for _ in range(count):
        n, n_keys, n_post, blob_len = rd.unpack(_SECTION)
        keys = np.frombuffer(rd.take(8 * n * n_keys), dtype="<u8").astype(np.uint64)
        keys = keys.reshape(n_keys, n)
        blob = bytes(rd.take(blob_len))
        counts, at = _varint.decode(blob, n_keys)
        post_pdf, at = _varint.decode(blob, n_post, at)
        post_off, at = _varint.decode(blob, n_post, at)
        if at != blob_len or counts.sum() != n_post:
            raise BundleFormatError(f"{path}: inconsistent {n}-gram section")
        ptr = np.zeros(n_keys + 1, dtype=np.int64)
        np.cumsum(counts, out=ptr[1:])
        indexes[n] = NGramIndex(n, keys, hash_keys(keys), ptr,
                                post_pdf.astype(np.int32), post_off.astype(np.int32), pdf_ids)
    if rd.pos != len(body):
        raise BundleFormatError(f"{path}: unexpected data after last section")
    return IndexBundle(indexes, manifest, params)
