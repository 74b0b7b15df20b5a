"""Query-set evaluation (MRR, latency) and fingerprint frequency exports.

Latencies cover fingerprint construction, search and ranking only; feature
extraction happens upstream and is never timed here.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import UsageError
from .index import IndexBundle
from .ingest import Query
from .model import BootlegScore
from .search import SearchConfig, _dynamic_plan, rank_of, search

log = logging.getLogger(__name__)

__all__ = [
    "DistributionExport",
    "EvalReport",
    "QueryRecord",
    "evaluate",
    "export_distribution",
    "mean_reciprocal_rank",
]

LATENCY_SCOPE = "search-only (fingerprinting + lookup + scoring + ranking)"


def mean_reciprocal_rank(ranks: Iterable[int]) -> float:
    ranks = np.asarray(list(ranks), dtype=float)
    if len(ranks) == 0:
        raise ValueError("MRR of an empty rank list")
    if (ranks < 1).any():
        raise ValueError("ranks start at 1")
    return float(np.mean(1.0 / ranks))


@dataclass
class QueryRecord:
    query_id: str
    rank: int
    rr: float
    seconds: float | None
    fingerprints: int
    postings: int


@dataclass
class EvalReport:
    config: dict
    condition: int
    records: list[QueryRecord] = field(default_factory=list)
    skipped: int = 0

    @property
    def ranks(self) -> list[int]:
        return [r.rank for r in self.records]

    @property
    def mrr(self) -> float:
        return mean_reciprocal_rank(self.ranks)

    def _seconds(self):
        secs = [r.seconds for r in self.records]
        if not secs or any(s is None for s in secs):
            return None
        return np.array(secs)

    @property
    def latency_mean(self) -> float | None:
        secs = self._seconds()
        return None if secs is None else float(secs.mean())

    @property
    def latency_std(self) -> float | None:
        secs = self._seconds()
        return None if secs is None else float(secs.std())

    @property
    def mean_postings(self) -> float:
        return float(np.mean([r.postings for r in self.records]))

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "condition": self.condition,
            "queries": len(self.records),
            "skipped": self.skipped,
            "mrr": self.mrr,
            "latency_scope": LATENCY_SCOPE,
            "latency_mean": self.latency_mean,
            "latency_std": self.latency_std,
            "records": [asdict(r) for r in self.records],
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["query_id", "rank", "rr", "seconds", "fingerprints", "postings"])
            for r in self.records:
                secs = "" if r.seconds is None else f"{r.seconds:.6f}"
                w.writerow([r.query_id, r.rank, f"{r.rr:.6f}", secs, r.fingerprints, r.postings])

    def summary(self) -> str:
        lat = "n/a (parallel run)"
        if self.latency_mean is not None:
            lat = f"{self.latency_mean * 1e3:.3f} ms +/- {self.latency_std * 1e3:.3f} ms"
        rows = [
            ("config", json.dumps(self.config)),
            ("condition", str(self.condition)),
            ("queries", f"{len(self.records)} ({self.skipped} skipped)"),
            ("MRR", f"{self.mrr:.4f}"),
            ("latency", lat),
            ("latency scope", LATENCY_SCOPE),
            ("mean postings", f"{self.mean_postings:.1f}"),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def _check_truth(queries: Sequence[Query], bundle: IndexBundle) -> None:
    manifest = bundle.manifest
    for q in queries:
        if not manifest.has_piece(q.piece_id):
            raise UsageError(f"query {q.query_id!r}: unknown piece id {q.piece_id}")
        if q.pdf_id not in manifest.piece(q.piece_id).pdf_ids:
            raise UsageError(
                f"query {q.query_id!r}: pdf {q.pdf_id} does not belong to piece {q.piece_id}"
            )


def evaluate(queries: Sequence[Query], bundle: IndexBundle, config: SearchConfig,
             condition: int = 1, warmup: bool = True, workers: int = 1) -> EvalReport:
    """Run every query and collect ranks, reciprocal ranks and latencies.

    ``condition=2`` removes each query's own PDF from the search and keeps only
    queries whose piece has at least one other PDF.  With ``workers > 1`` the
    queries run concurrently and no latencies are reported.
    """
    if condition not in (1, 2):
        raise UsageError(f"condition must be 1 or 2, got {condition}")
    queries = list(queries)
    _check_truth(queries, bundle)
    config.check(bundle)
    skipped = 0
    if condition == 2:
        kept = [q for q in queries if len(bundle.manifest.piece(q.piece_id).pdf_ids) >= 2]
        skipped = len(queries) - len(kept)
        queries = kept
    n_pieces = len(bundle.piece_ids)

    def run(q: Query):
        cfg = config.with_exclude(q.pdf_id) if condition == 2 else config
        result = search(q.words, bundle, cfg)
        # an empty query carries no evidence: count it as the worst rank
        rank = n_pieces if q.empty else rank_of(result, q.piece_id)
        return QueryRecord(q.query_id, rank, 1.0 / rank, result.elapsed,
                           result.fingerprints, result.postings)

    if warmup and queries:
        search(queries[0].words, bundle, config)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            records = list(pool.map(run, queries))
        for r in records:
            r.seconds = None
    else:
        records = [run(q) for q in queries]
    report = EvalReport(config.to_dict(), condition, records, skipped)
    if records:
        log.info("%s: MRR %.4f over %d queries", config.label, report.mrr, len(records))
    return report


@dataclass
class DistributionExport:
    """Fingerprint occurrence counts sorted from most to least frequent."""

    label: str
    counts: np.ndarray
    capped_keys: int = 0

    @property
    def peak(self) -> int:
        return int(self.counts[0]) if len(self.counts) else 0

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def rows(self) -> list[tuple[int, int]]:
        return [(i + 1, int(c)) for i, c in enumerate(self.counts)]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rank", "count"])
            w.writerows(self.rows())


def export_distribution(bundle: IndexBundle, config: SearchConfig,
                        sequences: Sequence[BootlegScore] | None = None,
                        exclude_capped: bool = True) -> DistributionExport:
    """Frequency distribution of fingerprint values.

    Fixed mode counts every stored n-gram key by posting-list length.
    Dynamic mode fingerprints each sequence (the bundle's own corpus by
    default) and counts how often each emitted key occurs; keys emitted at
    the length cap with a count above gamma are left out unless
    ``exclude_capped`` is false.  Emitted keys absent from the bundle (only
    possible for external sequences) are not counted.
    """
    config.check(bundle)
    if config.mode == "fixed":
        counts = np.sort(bundle.index(config.n).counts)[::-1]
        return DistributionExport(config.label, counts)

    if sequences is None:
        sequences = bundle.corpus()
    codes, capped_codes = [], []
    for seq in sequences:
        plan = _dynamic_plan(np.asarray(seq.words), bundle, config.gamma, config.n_max)
        code = plan.rows * (config.n_max + 1) + plan.ns
        absent = plan.rows < 0
        codes.append(code[~plan.capped & ~absent])
        capped_codes.append(code[plan.capped])
    codes = np.concatenate(codes) if codes else np.zeros(0, np.int64)
    capped = np.concatenate(capped_codes) if capped_codes else np.zeros(0, np.int64)
    n_capped = len(np.unique(capped))
    if not exclude_capped:
        codes = np.concatenate([codes, capped])
    _, counts = np.unique(codes, return_counts=True)
    g = "inf" if math.isinf(config.gamma) else int(config.gamma)
    return DistributionExport(f"dynamic(gamma={g})", np.sort(counts)[::-1], n_capped)
