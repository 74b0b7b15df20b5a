"""Bit-level and corpus-level data model.

A bootleg word is one bootleg-score column packed into an integer: bit ``i``
is set when staff position ``i`` (0 = lowest left-hand position, 61 = highest
right-hand position) carries a filled notehead.  Bits 62 and 63 are always
zero.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

N_POSITIONS = 62
WORD_LIMIT = 1 << N_POSITIONS

__all__ = [
    "N_POSITIONS",
    "WORD_LIMIT",
    "BootlegScore",
    "CorpusManifest",
    "FingerprintKey",
    "Piece",
    "as_word_array",
    "pack_word",
    "unpack_word",
]


def pack_word(column: Sequence[bool]) -> int:
    """Pack 62 staff-position flags into a bootleg word."""
    if len(column) != N_POSITIONS:
        raise ValueError(f"expected {N_POSITIONS} positions, got {len(column)}")
    value = 0
    for i, on in enumerate(column):
        if on:
            value |= 1 << i
    return value


def unpack_word(word: int) -> list[bool]:
    word = int(word)
    if word < 0 or word >= WORD_LIMIT:
        raise ValueError(f"not a 62-bit bootleg word: {word:#x}")
    return [bool((word >> i) & 1) for i in range(N_POSITIONS)]


def as_word_array(words: Iterable[int]) -> np.ndarray:
    """Return ``words`` as a validated, read-only uint64 array."""
    if isinstance(words, np.ndarray):
        if words.dtype.kind == "i" and words.size and words.min() < 0:
            raise ValueError(f"not a 62-bit bootleg word: {int(words.min())}")
        arr = np.array(words, dtype=np.uint64, copy=True)
    else:
        seq = [int(w) for w in words]
        for w in seq:
            if w < 0 or w >= WORD_LIMIT:
                raise ValueError(f"not a 62-bit bootleg word: {w:#x}")
        arr = np.array(seq, dtype=np.uint64)
    arr = arr.reshape(-1)
    if arr.size and int(arr.max()) >= WORD_LIMIT:
        raise ValueError(f"not a 62-bit bootleg word: {int(arr.max()):#x}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class FingerprintKey:
    """``n`` consecutive bootleg words used as one opaque (64*n)-bit key."""

    words: tuple[int, ...]

    def __post_init__(self):
        if not self.words:
            raise ValueError("a fingerprint key needs at least one word")
        object.__setattr__(self, "words", tuple(int(w) for w in self.words))

    @property
    def n(self) -> int:
        return len(self.words)

    def to_bytes(self) -> bytes:
        return np.asarray(self.words, dtype="<u8").tobytes()


@dataclass(frozen=True)
class BootlegScore:
    """Global word sequence of one PDF (all pages concatenated)."""

    pdf_id: int
    words: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "pdf_id", int(self.pdf_id))
        object.__setattr__(self, "words", as_word_array(self.words))

    def __len__(self) -> int:
        return len(self.words)

    def __eq__(self, other):
        if not isinstance(other, BootlegScore):
            return NotImplemented
        return self.pdf_id == other.pdf_id and np.array_equal(self.words, other.words)

    __hash__ = None


@dataclass(frozen=True)
class Piece:
    piece_id: int
    name: str
    pdf_ids: tuple[int, ...]


@dataclass(frozen=True)
class CorpusManifest:
    """Pieces, the PDFs that belong to them, and each PDF's source path."""

    pieces: tuple[Piece, ...] = ()
    pdf_sources: dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        piece_ids = [p.piece_id for p in self.pieces]
        if len(set(piece_ids)) != len(piece_ids):
            dup = sorted({i for i in piece_ids if piece_ids.count(i) > 1})
            raise ValueError(f"duplicate piece ids: {dup}")
        seen: dict[int, int] = {}
        for p in self.pieces:
            if not p.pdf_ids:
                raise ValueError(f"piece {p.piece_id} has no PDFs")
            for pdf in p.pdf_ids:
                if pdf in seen:
                    raise ValueError(
                        f"pdf id {pdf} listed under pieces {seen[pdf]} and {p.piece_id}"
                    )
                seen[pdf] = p.piece_id
        sources = dict(self.pdf_sources)
        for pdf in seen:
            sources.setdefault(pdf, "")
        extra = set(sources) - set(seen)
        if extra:
            raise ValueError(f"pdf ids without a piece: {sorted(extra)}")
        object.__setattr__(self, "pdf_sources", sources)
        object.__setattr__(self, "_pdf_to_piece", seen)
        object.__setattr__(self, "_by_id", {p.piece_id: p for p in self.pieces})

    @classmethod
    def simple(cls, pdf_ids: Iterable[int]) -> "CorpusManifest":
        """One piece per PDF, sharing the PDF's id."""
        return cls(tuple(Piece(i, f"piece-{i}", (i,)) for i in pdf_ids))

    @property
    def piece_ids(self) -> list[int]:
        return [p.piece_id for p in self.pieces]

    @property
    def pdf_ids(self) -> list[int]:
        return [pdf for p in self.pieces for pdf in p.pdf_ids]

    def piece_of(self, pdf_id: int) -> int:
        try:
            return self._pdf_to_piece[pdf_id]
        except KeyError:
            raise KeyError(f"unknown pdf id {pdf_id}") from None

    def piece(self, piece_id: int) -> Piece:
        try:
            return self._by_id[piece_id]
        except KeyError:
            raise KeyError(f"unknown piece id {piece_id}") from None

    def has_piece(self, piece_id: int) -> bool:
        return piece_id in self._by_id

    def to_dict(self) -> dict:
        return {
            "pieces": [
                {
                    "piece_id": p.piece_id,
                    "name": p.name,
                    "pdfs": [
                        {"pdf_id": pdf, "source": self.pdf_sources.get(pdf, "")}
                        for pdf in p.pdf_ids
                    ],
                }
                for p in self.pieces
            ]
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CorpusManifest":
        pieces = []
        sources = {}
        for entry in data.get("pieces", []):
            pdfs = []
            for pdf in entry["pdfs"]:
                pdfs.append(int(pdf["pdf_id"]))
                sources[int(pdf["pdf_id"])] = pdf.get("source", "")
            pieces.append(Piece(int(entry["piece_id"]), str(entry.get("name", "")), tuple(pdfs)))
        return cls(tuple(pieces), sources)
