"""Fingerprinting of queries and histogram-of-offsets search."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import UsageError
from .index import DEFAULT_GAMMA, DEFAULT_N_MAX, IndexBundle
from .model import FingerprintKey, as_word_array

__all__ = [
    "QueryFingerprint",
    "RankedResult",
    "SearchConfig",
    "make_dynamic_fingerprints",
    "make_fixed_fingerprints",
    "rank_of",
    "score_search",
    "search",
]


@dataclass(frozen=True)
class SearchConfig:
    """Search settings.

    ``mode`` is ``"dynamic"`` or ``"fixed"``; fixed mode uses n-grams of
    length ``n``.  ``gamma`` may be ``math.inf`` to disable extension.
    """

    mode: str = "dynamic"
    n: int | None = None
    gamma: float = DEFAULT_GAMMA
    n_max: int = DEFAULT_N_MAX
    bin_width: int = 1
    exclude_pdf: int | None = None

    def __post_init__(self):
        if self.mode == "fixed":
            if self.n is None or self.n < 1:
                raise UsageError("fixed mode needs n >= 1")
        elif self.mode == "dynamic":
            if not self.gamma > 0:
                raise UsageError(f"gamma must be positive, got {self.gamma}")
            if self.n_max < 1:
                raise UsageError(f"n_max must be >= 1, got {self.n_max}")
        else:
            raise UsageError(f"unknown mode {self.mode!r}")
        if int(self.bin_width) != self.bin_width or self.bin_width < 1:
            raise UsageError(f"bin_width must be a positive integer, got {self.bin_width}")

    @classmethod
    def fixed(cls, n: int, **kw) -> "SearchConfig":
        return cls(mode="fixed", n=n, **kw)

    @classmethod
    def dynamic(cls, gamma=DEFAULT_GAMMA, n_max=DEFAULT_N_MAX, **kw) -> "SearchConfig":
        return cls(mode="dynamic", gamma=gamma, n_max=n_max, **kw)

    @classmethod
    def parse_mode(cls, text: str, **kw) -> "SearchConfig":
        """Build a config from ``"dynamic"`` or ``"fixed:N"``."""
        if text == "dynamic":
            return cls.dynamic(**kw)
        head, _, tail = text.partition(":")
        if head == "fixed" and tail.isdigit():
            kw.pop("gamma", None)
            kw.pop("n_max", None)
            return cls.fixed(int(tail), **kw)
        raise UsageError(f"mode must be 'dynamic' or 'fixed:N', got {text!r}")

    def with_exclude(self, pdf_id: int | None) -> "SearchConfig":
        return replace(self, exclude_pdf=pdf_id)

    @property
    def label(self) -> str:
        if self.mode == "fixed":
            return f"{self.n}-gram"
        g = "inf" if math.isinf(self.gamma) else int(self.gamma)
        return f"dynamic(gamma={g}, n_max={self.n_max})"

    def required_ns(self) -> list[int]:
        return [self.n] if self.mode == "fixed" else list(range(1, self.n_max + 1))

    def check(self, bundle: IndexBundle) -> None:
        for n in self.required_ns():
            bundle.index(n)
        if self.exclude_pdf is not None:
            bundle.pdf_position(self.exclude_pdf)

    def to_dict(self) -> dict:
        d = {"mode": self.mode, "bin_width": self.bin_width, "exclude_pdf": self.exclude_pdf}
        if self.mode == "fixed":
            d["n"] = self.n
        else:
            d["gamma"] = None if math.isinf(self.gamma) else self.gamma
            d["n_max"] = self.n_max
        return d


@dataclass(frozen=True)
class QueryFingerprint:
    """One fingerprint of a query.

    ``count`` is the key's posting-list length when it was known at emission
    time (dynamic mode); ``capped`` marks dynamic fingerprints emitted at the
    length cap although their count exceeds gamma.
    """

    start: int
    key: FingerprintKey
    count: int | None = None
    capped: bool = False

    @property
    def n(self) -> int:
        return self.key.n


@dataclass
class RankedResult:
    piece_ids: np.ndarray
    scores: np.ndarray
    pdf_scores: np.ndarray = field(repr=False)
    fingerprints: int = 0
    postings: int = 0
    elapsed: float | None = None

    def __len__(self):
        return len(self.piece_ids)

    def __iter__(self):
        return zip(self.piece_ids.tolist(), self.scores.tolist())

    def top(self, k: int = 10) -> list[tuple[int, int]]:
        return list(zip(self.piece_ids[:k].tolist(), self.scores[:k].tolist()))

    def same_ranking(self, other: "RankedResult") -> bool:
        return (np.array_equal(self.piece_ids, other.piece_ids)
                and np.array_equal(self.scores, other.scores))


@dataclass
class _Plan:
    """Fingerprints as parallel arrays; ``rows`` index the n-gram tables."""

    starts: np.ndarray
    ns: np.ndarray
    rows: np.ndarray
    counts: np.ndarray
    capped: np.ndarray


def _windows(words: np.ndarray, n: int) -> np.ndarray:
    if len(words) < n:
        return np.zeros((0, n), dtype=np.uint64)
    return sliding_window_view(words, n)


def _excluded_counts(idx, rows: np.ndarray, excluded_words: np.ndarray) -> np.ndarray:
    """How many of each row's postings belong to the excluded PDF."""
    own = idx.find_rows(_windows(excluded_words, idx.n))
    own = own[own >= 0]
    if len(own) == 0:
        return np.zeros(len(rows), dtype=np.int64)
    own_rows, own_counts = np.unique(own, return_counts=True)
    at = np.clip(np.searchsorted(own_rows, rows), 0, len(own_rows) - 1)
    return np.where(own_rows[at] == rows, own_counts[at], 0)


def _dynamic_plan(words: np.ndarray, bundle: IndexBundle, gamma, n_max: int,
                  exclude_pdf: int | None = None) -> _Plan:
    # counts ignore the excluded PDF so that exclusion behaves like removal
    excluded_words = None if exclude_pdf is None else bundle.pdf_words(exclude_pdf)
    L = len(words)
    starts = np.arange(L, dtype=np.int64)
    chosen = np.zeros(L, dtype=np.int64)
    rows = np.full(L, -1, dtype=np.int64)
    counts = np.zeros(L, dtype=np.int64)
    pending = np.ones(L, dtype=bool)
    for n in range(1, n_max + 1):
        todo = np.flatnonzero(pending & (starts + n <= L))
        if len(todo) == 0:
            break
        idx = bundle.index(n)
        r = idx.find_rows(_windows(words, n)[todo])
        c = idx.row_counts(r)
        if excluded_words is not None:
            c = c - _excluded_counts(idx, r, excluded_words)
        # last chance for this start: the cap (n_max or sequence end)
        at_cap = (n == n_max) | (todo + n == L)
        take = (c <= gamma) | at_cap
        sel = todo[take]
        chosen[sel] = n
        rows[sel] = r[take]
        counts[sel] = c[take]
        pending[sel] = False
    capped = counts > gamma
    return _Plan(starts, chosen, rows, counts, capped)


def _fixed_plan(words: np.ndarray, bundle: IndexBundle | None, n: int) -> _Plan:
    m = max(0, len(words) - n + 1)
    starts = np.arange(m, dtype=np.int64)
    if bundle is None:
        rows = np.full(m, -1, dtype=np.int64)
        counts = np.zeros(m, dtype=np.int64)
    else:
        idx = bundle.index(n)
        rows = idx.find_rows(_windows(words, n))
        counts = idx.row_counts(rows)
    return _Plan(starts, np.full(m, n, dtype=np.int64), rows, counts, np.zeros(m, dtype=bool))


def _plan_to_fingerprints(words: np.ndarray, plan: _Plan, with_counts: bool):
    out = []
    for s, n, c, cap in zip(plan.starts.tolist(), plan.ns.tolist(),
                            plan.counts.tolist(), plan.capped.tolist()):
        key = FingerprintKey(tuple(words[s:s + n].tolist()))
        out.append(QueryFingerprint(s, key, c if with_counts else None, cap))
    return out


def make_dynamic_fingerprints(words, bundle: IndexBundle, config: SearchConfig):
    """One fingerprint per start position, each the shortest n-gram whose
    database count is at most ``gamma`` (forced at ``min(n_max, L - s)``)."""
    if config.mode != "dynamic":
        raise UsageError("make_dynamic_fingerprints needs a dynamic config")
    words = as_word_array(words)
    config.check(bundle)
    plan = _dynamic_plan(words, bundle, config.gamma, config.n_max, config.exclude_pdf)
    return _plan_to_fingerprints(words, plan, True)


def make_fixed_fingerprints(words, n: int) -> list[QueryFingerprint]:
    if n < 1:
        raise UsageError(f"n must be >= 1, got {n}")
    words = as_word_array(words)
    return _plan_to_fingerprints(words, _fixed_plan(words, None, n), False)


def _score_plan(plan: _Plan, bundle: IndexBundle, config: SearchConfig) -> RankedResult:
    pdf_parts, rel_parts = [], []
    processed = 0
    for n in np.unique(plan.ns).tolist():
        idx = bundle.index(n)
        sel = (plan.ns == n) & (plan.rows >= 0)
        rows, starts = plan.rows[sel], plan.starts[sel]
        lo = idx.ptr[rows]
        cnt = idx.ptr[rows + 1] - lo
        total = int(cnt.sum())
        if total == 0:
            continue
        processed += total
        first = np.cumsum(cnt) - cnt
        gather = np.arange(total, dtype=np.int64) + np.repeat(lo - first, cnt)
        pdf_parts.append(idx.post_pdf[gather])
        rel_parts.append(idx.post_off[gather].astype(np.int64) - np.repeat(starts, cnt))

    n_pdfs = len(bundle.pdf_ids)
    pdf_scores = np.zeros(n_pdfs, dtype=np.int64)
    if pdf_parts:
        pdf = np.concatenate(pdf_parts).astype(np.int64)
        bins = np.floor_divide(np.concatenate(rel_parts), int(config.bin_width))
        if config.exclude_pdf is not None:
            keep = pdf != bundle.pdf_position(config.exclude_pdf)
            pdf, bins = pdf[keep], bins[keep]
        if len(pdf):
            lo_bin = int(bins.min())
            span = int(bins.max()) - lo_bin + 1
            if span * n_pdfs < 2**62:
                combined = np.sort(pdf * span + (bins - lo_bin))
                edge = np.flatnonzero(np.diff(combined)) + 1
                run_pdf = combined[np.concatenate(([0], edge))] // span
            else:
                order = np.lexsort((bins, pdf))
                pdf, bins = pdf[order], bins[order]
                edge = np.flatnonzero((np.diff(pdf) != 0) | (np.diff(bins) != 0)) + 1
                run_pdf = pdf[np.concatenate(([0], edge))]
            run_len = np.diff(np.concatenate(([0], edge, [len(pdf)])))
            first_run = np.flatnonzero(np.concatenate(([True], np.diff(run_pdf) != 0)))
            pdf_scores[run_pdf[first_run]] = np.maximum.reduceat(run_len, first_run)

    piece_scores = np.zeros(len(bundle.piece_ids), dtype=np.int64)
    np.maximum.at(piece_scores, bundle.pdf_piece, pdf_scores)
    order = np.lexsort((bundle.piece_ids, -piece_scores))
    return RankedResult(bundle.piece_ids[order], piece_scores[order], pdf_scores,
                        fingerprints=len(plan.starts), postings=processed)


def score_search(fingerprints: Sequence[QueryFingerprint], bundle: IndexBundle,
                 config: SearchConfig) -> RankedResult:
    """Histogram-of-offsets score of every piece for the given fingerprints."""
    if config.exclude_pdf is not None:
        bundle.pdf_position(config.exclude_pdf)
    fps = list(fingerprints)
    starts = np.array([f.start for f in fps], dtype=np.int64)
    ns = np.array([f.n for f in fps], dtype=np.int64)
    rows = np.full(len(fps), -1, dtype=np.int64)
    for n in np.unique(ns).tolist():
        idx = bundle.index(n)
        sel = np.flatnonzero(ns == n)
        keys = np.array([fps[i].key.words for i in sel], dtype=np.uint64)
        rows[sel] = idx.find_rows(keys)
    plan = _Plan(starts, ns, rows, np.zeros(len(fps), np.int64), np.zeros(len(fps), bool))
    return _score_plan(plan, bundle, config)


def search(words, bundle: IndexBundle, config: SearchConfig) -> RankedResult:
    """Fingerprint ``words`` per ``config`` and score them; records elapsed time."""
    t0 = time.perf_counter()
    words = as_word_array(words)
    config.check(bundle)
    if config.mode == "dynamic":
        plan = _dynamic_plan(words, bundle, config.gamma, config.n_max, config.exclude_pdf)
    else:
        plan = _fixed_plan(words, bundle, config.n)
    result = _score_plan(plan, bundle, config)
    result.elapsed = time.perf_counter() - t0
    return result


def rank_of(result: RankedResult, truth_piece_id: int) -> int:
    """1-based rank of ``truth_piece_id`` under the score/id ordering."""
    hit = np.flatnonzero(result.piece_ids == truth_piece_id)
    if len(hit) == 0:
        raise UsageError(f"piece {truth_piece_id} is not in the result")
    return int(hit[0]) + 1
