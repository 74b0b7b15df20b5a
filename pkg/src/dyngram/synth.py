"""Synthetic bootleg-score corpora for benchmarks and demos.

Words come from a fixed vocabulary of sparse 62-bit masks whose unigram
frequencies follow a Zipf law, so a handful of words (mostly single-note
columns) dominate the corpus the way they do in real piano scores.  Each
piece is a walk on a sparse first-order Markov chain over that vocabulary.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import Query, QuerySet, write_feature_file, write_manifest, write_queries
from .model import N_POSITIONS, BootlegScore, CorpusManifest, Piece

__all__ = ["SyntheticCorpus", "flip_noise", "make_corpus", "make_queries", "make_vocabulary"]


@dataclass
class SyntheticCorpus:
    manifest: CorpusManifest
    scores: list[BootlegScore]

    @property
    def n_words(self) -> int:
        return sum(len(s) for s in self.scores)

    def score(self, pdf_id: int) -> BootlegScore:
        for s in self.scores:
            if s.pdf_id == pdf_id:
                return s
        raise KeyError(pdf_id)

    def write(self, root) -> tuple[Path, Path]:
        """Write manifest and feature files under ``root``; returns their paths."""
        root = Path(root)
        features = root / "features"
        for s in self.scores:
            # split into pages of 300 columns to exercise page concatenation
            pages = [s.words[i:i + 300] for i in range(0, len(s.words), 300)] or [[]]
            write_feature_file(features / f"{s.pdf_id}.json", s.pdf_id, pages)
        manifest_path = root / "manifest.json"
        write_manifest(self.manifest, manifest_path)
        return manifest_path, features


def make_vocabulary(size: int, rng: np.random.Generator) -> np.ndarray:
    """``size`` distinct nonzero words; earlier words have fewer set bits."""
    vocab: dict[int, None] = {}
    while len(vocab) < size:
        frac = len(vocab) / size
        # single notes first, then dyads and small chords
        bits = 1 + int(rng.poisson(4 * frac))
        positions = rng.choice(N_POSITIONS, size=min(bits, 8), replace=False)
        vocab.setdefault(int(sum(1 << int(p) for p in positions)), None)
    return np.array(list(vocab), dtype=np.uint64)


def make_corpus(n_pieces: int = 1000, min_len: int = 200, max_len: int = 2000, *,
                vocab_size: int = 5000, zipf: float = 0.9, branching: int = 8,
                jump: float = 0.2, editions: float = 0.0, edition_noise: float = 0.1,
                seed: int = 0) -> SyntheticCorpus:
    """Generate ``n_pieces`` Markov-chain pieces with lengths in [min_len, max_len].

    A fraction ``editions`` of pieces get a second PDF: a copy of the first
    with ``edition_noise`` of its words replaced, standing in for an
    alternate edition of the same music.
    """
    rng = np.random.default_rng(seed)
    vocab = make_vocabulary(vocab_size, rng)
    weights = 1.0 / np.arange(1, vocab_size + 1) ** zipf
    cdf = np.cumsum(weights / weights.sum())

    def draw(k):
        return np.minimum(np.searchsorted(cdf, rng.random(k)), vocab_size - 1)

    successors = draw(vocab_size * branching).reshape(vocab_size, branching)
    lengths = rng.integers(min_len, max_len + 1, size=n_pieces)
    seqs = np.zeros((n_pieces, int(lengths.max())), dtype=np.int64)
    state = draw(n_pieces)
    for t in range(seqs.shape[1]):
        seqs[:, t] = state
        step = successors[state, rng.integers(0, branching, size=n_pieces)]
        jumping = rng.random(n_pieces) < jump
        step[jumping] = draw(int(jumping.sum()))
        state = step

    pieces, scores = [], []
    pdf_id = 0
    for i in range(n_pieces):
        words = vocab[seqs[i, :lengths[i]]]
        pdfs = [pdf_id]
        scores.append(BootlegScore(pdf_id, words))
        pdf_id += 1
        if rng.random() < editions:
            alt = words.copy()
            swap = rng.random(len(alt)) < edition_noise
            alt[swap] = vocab[draw(int(swap.sum()))]
            scores.append(BootlegScore(pdf_id, alt))
            pdfs.append(pdf_id)
            pdf_id += 1
        pieces.append(Piece(i, f"synthetic-{i:05d}", tuple(pdfs)))
    return SyntheticCorpus(CorpusManifest(tuple(pieces)), scores)


def flip_noise(words: np.ndarray, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Flip one random bit in each word with probability ``rate``.

    A flip that would clear the word's only set bit sets the next position
    instead, so noisy words stay nonzero.
    """
    words = np.array(words, dtype=np.uint64)
    hit = np.flatnonzero(rng.random(len(words)) < rate)
    bit = rng.integers(0, N_POSITIONS, size=len(hit)).astype(np.uint64)
    flipped = words[hit] ^ (np.uint64(1) << bit)
    empty = flipped == 0
    alt_bit = (bit[empty] + np.uint64(1)) % np.uint64(N_POSITIONS)
    flipped[empty] = words[hit][empty] | (np.uint64(1) << alt_bit)
    words[hit] = flipped
    return words


def make_queries(corpus: SyntheticCorpus, n_queries: int = 500, min_len: int = 40,
                 max_len: int = 100, noise: float = 0.05, seed: int = 1,
                 path=None) -> QuerySet:
    """Noisy contiguous excerpts of randomly chosen PDFs."""
    rng = np.random.default_rng(seed)
    eligible = [s for s in corpus.scores if len(s) >= min_len]
    picks = rng.choice(len(eligible), size=n_queries, replace=n_queries > len(eligible))
    queries = []
    for qi, k in enumerate(picks):
        score = eligible[int(k)]
        length = int(rng.integers(min_len, min(max_len, len(score)) + 1))
        start = int(rng.integers(0, len(score) - length + 1))
        words = flip_noise(score.words[start:start + length], noise, rng)
        queries.append(Query(f"q{qi:05d}", corpus.manifest.piece_of(score.pdf_id),
                             score.pdf_id, words))
    qs = QuerySet(tuple(queries))
    if path is not None:
        write_queries(qs, path)
    return qs
