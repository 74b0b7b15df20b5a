"""Brute-force reference implementations used as test oracles.

Everything here works on plain Python lists and tuples and shares no code
with the package's numpy paths.
"""
from __future__ import annotations

import math
from collections import Counter

import numpy as np

from dyngram.model import BootlegScore, CorpusManifest, Piece


def bits_to_int(column):
    """Independent bit assembly: read the column as a binary numeral."""
    return int("".join("1" if b else "0" for b in reversed(column)), 2)


def ngrams(words, n):
    return [tuple(words[i:i + n]) for i in range(len(words) - n + 1)]


def brute_postings(corpus: dict, key: tuple) -> list[tuple[int, int]]:
    """All (pdf_id, offset) where ``key`` occurs, sorted."""
    n = len(key)
    out = []
    for pdf, words in corpus.items():
        for j, g in enumerate(ngrams(words, n)):
            if g == key:
                out.append((pdf, j))
    return sorted(out)


def brute_count(corpus: dict, key: tuple) -> int:
    return len(brute_postings(corpus, key))


def brute_dynamic(corpus: dict, query: list, gamma, n_max: int):
    """(start, key, count, capped) per start, by scanning the corpus."""
    out = []
    L = len(query)
    for s in range(L):
        cap = min(n_max, L - s)
        for n in range(1, cap + 1):
            key = tuple(query[s:s + n])
            c = brute_count(corpus, key)
            if c <= gamma or n == cap:
                out.append((s, key, c, c > gamma))
                break
    return out


def brute_scores(corpus: dict, pieces: dict, fingerprints, bin_width=1, exclude=None):
    """Piece scores and ranking from explicit per-PDF offset histograms.

    ``fingerprints`` is a list of (start, key) pairs; ``pieces`` maps piece id
    to its pdf ids.  Returns (ranking as [(piece, score)], pdf scores dict).
    """
    pdf_scores = {}
    for pdf, words in corpus.items():
        hist = Counter()
        if pdf != exclude:
            for start, key in fingerprints:
                for j, g in enumerate(ngrams(words, len(key))):
                    if g == key:
                        hist[math.floor((j - start) / bin_width)] += 1
        pdf_scores[pdf] = max(hist.values(), default=0)
    piece_scores = {p: max(pdf_scores[d] for d in pdfs) for p, pdfs in pieces.items()}
    ranking = sorted(piece_scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranking, pdf_scores


def random_corpus(rng: np.random.Generator, max_pdfs=20, max_len=50, alphabet=None):
    """A small corpus over a tiny alphabet, grouped into pieces with sparse ids.

    Returns (scores, manifest, plain dict pdf_id -> list of words).
    """
    n_pdfs = int(rng.integers(1, max_pdfs + 1))
    k = alphabet or int(rng.integers(2, 7))
    vocab = [int(v) for v in rng.choice(2**20, size=k, replace=False) + 1]
    pdf_ids = sorted(int(i) for i in rng.choice(1000, size=n_pdfs, replace=False))
    plain = {}
    for pdf in pdf_ids:
        length = int(rng.integers(0, max_len + 1))
        plain[pdf] = [vocab[int(i)] for i in rng.integers(0, k, size=length)]
    # shuffle pdfs into pieces
    order = list(rng.permutation(pdf_ids))
    piece_ids = sorted(int(i) for i in rng.choice(1000, size=n_pdfs, replace=False))
    pieces = []
    while order:
        take = int(rng.integers(1, 4))
        group, order = tuple(int(x) for x in order[:take]), order[take:]
        pieces.append(Piece(piece_ids[len(pieces)], f"p{len(pieces)}", group))
    manifest = CorpusManifest(tuple(pieces))
    scores = [BootlegScore(pdf, np.array(plain[pdf], dtype=np.uint64)) for pdf in pdf_ids]
    return scores, manifest, plain, vocab


def random_query(rng: np.random.Generator, plain: dict, vocab: list, max_len=15):
    """Either a (possibly mutated) excerpt of a corpus PDF or random words."""
    nonempty = [w for w in plain.values() if w]
    length = int(rng.integers(0, max_len + 1))
    if nonempty and rng.random() < 0.7:
        src = nonempty[int(rng.integers(len(nonempty)))]
        a = int(rng.integers(0, len(src)))
        q = list(src[a:a + max(length, 1)])
        for i in range(len(q)):
            if rng.random() < 0.1:
                q[i] = vocab[int(rng.integers(len(vocab)))]
        return q
    return [vocab[int(i)] for i in rng.integers(0, len(vocab), size=length)]


def pieces_of(manifest: CorpusManifest) -> dict:
    return {p.piece_id: p.pdf_ids for p in manifest.pieces}
