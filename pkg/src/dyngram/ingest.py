"""Loading of manifests, per-PDF feature files and query sets.

All three formats are JSON documents with a leading ``format_version`` field.

Manifest::

    {"format_version": 1,
     "pieces": [{"piece_id": 0, "name": "Chopin Op. 28 No. 4",
                 "pdfs": [{"pdf_id": 0, "source": "imslp/12345.pdf"}]}]}

Feature file, ``<feature_root>/<pdf_id>.json``::

    {"format_version": 1, "pdf_id": 0, "pages": [[5, "0x1f"], [9, 1]]}

Words are decimal integers or ``0x``-prefixed hexadecimal strings.

Query file::

    {"format_version": 1,
     "queries": [{"query_id": "q0", "piece_id": 0, "pdf_id": 0,
                  "words": [5, 9, 1]}]}
"""
from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import IngestError
from .model import WORD_LIMIT, BootlegScore, CorpusManifest, as_word_array

log = logging.getLogger(__name__)

FORMAT_VERSION = 1

__all__ = [
    "FORMAT_VERSION",
    "IngestError",
    "Query",
    "QuerySet",
    "feature_path",
    "ingest_corpus",
    "load_feature_file",
    "load_manifest",
    "load_queries",
    "parse_word",
    "write_feature_file",
    "write_manifest",
    "write_queries",
]


@dataclass(frozen=True)
class Query:
    query_id: str
    piece_id: int
    pdf_id: int
    words: np.ndarray = field(repr=False)

    @property
    def empty(self) -> bool:
        return len(self.words) == 0


@dataclass(frozen=True)
class QuerySet:
    queries: tuple[Query, ...] = ()

    def __len__(self):
        return len(self.queries)

    def __iter__(self):
        return iter(self.queries)

    def __getitem__(self, i):
        return self.queries[i]


def parse_word(token, where: str = "") -> int:
    """Parse one word token (int or decimal/hex string) and range-check it."""
    if isinstance(token, bool):
        raise IngestError(f"{where}: boolean is not a word")
    if isinstance(token, int):
        value = token
    elif isinstance(token, str):
        try:
            value = int(token, 0)
        except ValueError:
            raise IngestError(f"{where}: cannot parse word {token!r}") from None
    else:
        raise IngestError(f"{where}: cannot parse word {token!r}")
    if value < 0 or value >= WORD_LIMIT:
        raise IngestError(f"{where}: word {value:#x} does not fit in 62 bits")
    return value


def _check_version(doc, path) -> None:
    if not isinstance(doc, dict):
        raise IngestError(f"{path}: expected a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise IngestError(f"{path}: unsupported format_version {version!r}")


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise IngestError(f"{path}: invalid JSON ({exc})") from None


def load_manifest(path) -> CorpusManifest:
    doc = _read_json(path)
    _check_version(doc, path)
    try:
        return CorpusManifest.from_dict(doc)
    except (KeyError, TypeError) as exc:
        raise IngestError(f"{path}: malformed manifest ({exc!r})") from None
    except ValueError as exc:
        raise IngestError(f"{path}: {exc}") from None


def feature_path(feature_root, pdf_id: int) -> Path:
    return Path(feature_root) / f"{pdf_id}.json"


def load_feature_file(path, pdf_id: int | None = None) -> BootlegScore:
    """Read one feature file; drops all-zero words while concatenating pages."""
    doc = _read_json(path)
    _check_version(doc, path)
    file_pdf = doc.get("pdf_id", pdf_id)
    if pdf_id is not None and file_pdf != pdf_id:
        raise IngestError(f"{path}: pdf_id {file_pdf} does not match manifest id {pdf_id}")
    pages = doc.get("pages")
    if not isinstance(pages, list):
        raise IngestError(f"{path}: 'pages' must be a list of lists")
    words = []
    for p, page in enumerate(pages):
        if not isinstance(page, list):
            raise IngestError(f"{path}: page {p} is not a list")
        for c, token in enumerate(page):
            w = parse_word(token, f"{path}: page {p} column {c}")
            if w:
                words.append(w)
    return BootlegScore(int(file_pdf), np.array(words, dtype=np.uint64))


def ingest_corpus(manifest_path, feature_root, threads: int = 1):
    """Load the manifest and one BootlegScore per PDF, in manifest order."""
    manifest = load_manifest(manifest_path)
    pdf_ids = manifest.pdf_ids
    paths = [feature_path(feature_root, pdf) for pdf in pdf_ids]
    for pdf, path in zip(pdf_ids, paths):
        if not path.is_file():
            raise IngestError(f"feature file for pdf {pdf} not found: {path}")
    if threads > 1 and len(paths) > 1:
        with ThreadPoolExecutor(threads) as pool:
            scores = list(pool.map(load_feature_file, paths, pdf_ids))
    else:
        scores = [load_feature_file(path, pdf) for path, pdf in zip(paths, pdf_ids)]
    log.info("ingested %d pieces, %d pdfs, %d words", len(manifest.pieces),
             len(scores), sum(len(s) for s in scores))
    return manifest, scores


def load_queries(path, manifest: CorpusManifest) -> QuerySet:
    doc = _read_json(path)
    _check_version(doc, path)
    records = doc.get("queries")
    if not isinstance(records, list):
        raise IngestError(f"{path}: 'queries' must be a list")
    queries = []
    seen = set()
    for i, rec in enumerate(records):
        try:
            qid = str(rec["query_id"])
            piece_id = int(rec["piece_id"])
            pdf_id = int(rec["pdf_id"])
            tokens = rec["words"]
        except (KeyError, TypeError, ValueError) as exc:
            raise IngestError(f"{path}: malformed query record {i} ({exc!r})") from None
        if qid in seen:
            raise IngestError(f"{path}: duplicate query_id {qid!r}")
        seen.add(qid)
        if not manifest.has_piece(piece_id):
            raise IngestError(f"query {qid!r}: unknown piece id {piece_id}")
        if pdf_id not in manifest.piece(piece_id).pdf_ids:
            raise IngestError(f"query {qid!r}: pdf {pdf_id} does not belong to piece {piece_id}")
        words = [parse_word(t, f"query {qid!r} word {j}") for j, t in enumerate(tokens)]
        words = as_word_array([w for w in words if w])
        if len(words) == 0:
            log.warning("query %r has no words; it will rank its piece last", qid)
        queries.append(Query(qid, piece_id, pdf_id, words))
    return QuerySet(tuple(queries))


def _dump(doc, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, separators=(",", ":"))
    os.replace(tmp, path)


def write_manifest(manifest: CorpusManifest, path) -> None:
    _dump({"format_version": FORMAT_VERSION, **manifest.to_dict()}, path)


def write_feature_file(path, pdf_id: int, pages: Sequence[Iterable[int]], hex_words=False) -> None:
    fmt = (lambda w: hex(int(w))) if hex_words else int
    doc = {
        "format_version": FORMAT_VERSION,
        "pdf_id": int(pdf_id),
        "pages": [[fmt(w) for w in page] for page in pages],
    }
    _dump(doc, path)


def write_queries(queries: Iterable[Query], path) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "queries": [
            {
                "query_id": q.query_id,
                "piece_id": int(q.piece_id),
                "pdf_id": int(q.pdf_id),
                "words": [int(w) for w in q.words],
            }
            for q in queries
        ],
    }
    _dump(doc, path)
