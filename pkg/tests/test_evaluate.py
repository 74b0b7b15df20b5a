import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dyngram.errors import UsageError
from dyngram.evaluate import evaluate, export_distribution, mean_reciprocal_rank
from dyngram.index import build_bundle
from dyngram.ingest import Query
from dyngram.model import BootlegScore, CorpusManifest, Piece, as_word_array
from dyngram.search import SearchConfig
from oracles import brute_count, brute_dynamic, brute_scores, ngrams, pieces_of, random_corpus


def test_mrr_formula():
    assert mean_reciprocal_rank([1, 1, 1]) == 1.0
    assert mean_reciprocal_rank([1, 2, 4]) == pytest.approx((1 + 0.5 + 0.25) / 3, abs=1e-12)
    with pytest.raises(ValueError):
        mean_reciprocal_rank([])
    with pytest.raises(ValueError):
        mean_reciprocal_rank([0])


@given(st.lists(st.integers(1, 50), min_size=1, max_size=30), st.randoms())
def test_mrr_order_invariant(ranks, rnd):
    shuffled = list(ranks)
    rnd.shuffle(shuffled)
    assert mean_reciprocal_rank(shuffled) == pytest.approx(mean_reciprocal_rank(ranks))


def q(qid, piece, pdf, words):
    return Query(qid, piece, pdf, as_word_array(words))


@pytest.fixture
def toy(toy_corpus):
    return build_bundle(toy_corpus, 4)


def test_exact_excerpts_score_perfectly(toy, toy_corpus):
    queries = [q("a", 0, 0, [12, 13]), q("b", 1, 1, [21, 22, 23]), q("c", 2, 2, [33, 34])]
    plain = {s.pdf_id: s.words.tolist() for s in toy_corpus}
    for query in queries:
        fps = [(s, k) for s, k, _, _ in brute_dynamic(plain, query.words.tolist(), 1000, 4)]
        ranking, _ = brute_scores(plain, pieces_of(toy.manifest), fps)
        assert ranking[0][0] == query.piece_id
    report = evaluate(queries, toy, SearchConfig.dynamic())
    assert report.mrr == 1.0
    assert report.ranks == [1, 1, 1]
    assert all(r.seconds is not None and r.seconds >= 0 for r in report.records)
    assert report.latency_mean is not None and report.latency_std is not None


def test_empty_query_ranks_last(toy):
    report = evaluate([q("e", 0, 0, [])], toy, SearchConfig.dynamic())
    assert report.ranks == [3]
    assert report.records[0].fingerprints == 0


def test_unknown_truth_fails_before_running(toy):
    with pytest.raises(UsageError, match="'x'"):
        evaluate([q("ok", 0, 0, [11]), q("x", 7, 0, [11])], toy, SearchConfig.dynamic())
    with pytest.raises(UsageError, match="'y'"):
        evaluate([q("y", 0, 1, [11])], toy, SearchConfig.dynamic())


def test_condition_two_subset_and_exclusion():
    manifest = CorpusManifest((Piece(0, "two eds", (0, 1)), Piece(1, "one ed", (2,))))
    corpus = [BootlegScore(0, [1, 2, 3, 4]), BootlegScore(1, [1, 2, 9, 4]),
              BootlegScore(2, [1, 2, 3, 4, 5])]
    bundle = build_bundle(corpus, 4, manifest=manifest)
    queries = [q("a", 0, 0, [1, 2, 3, 4]), q("b", 1, 2, [1, 2, 3])]
    cond1 = evaluate(queries, bundle, SearchConfig.fixed(1))
    cond2 = evaluate(queries, bundle, SearchConfig.fixed(1), condition=2)
    assert [r.query_id for r in cond2.records] == ["a"] and cond2.skipped == 1
    # with pdf 0 present piece 0 ties piece 1 at 4 and wins on id
    assert cond1.ranks == [1, 2]
    # pdf 1 alone scores 3, piece 1 still scores 4
    assert cond2.ranks == [2]


def test_parallel_reports_no_latency(toy):
    queries = [q(str(i), 0, 0, [11, 12]) for i in range(6)]
    report = evaluate(queries, toy, SearchConfig.dynamic(), workers=3)
    assert report.latency_mean is None
    assert report.mrr == 1.0
    assert "n/a" in report.summary()


def test_report_files(toy, tmp_path):
    report = evaluate([q("a", 0, 0, [11, 12]), q("b", 1, 1, [11])], toy, SearchConfig.fixed(1))
    report.write_csv(tmp_path / "r.csv")
    report.write_json(tmp_path / "r.json")
    rows = list(csv.DictReader(open(tmp_path / "r.csv")))
    assert list(rows[0]) == ["query_id", "rank", "rr", "seconds", "fingerprints", "postings"]
    assert [int(r["rank"]) for r in rows] == [1, 2]
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["mrr"] == pytest.approx(0.75)
    assert doc["config"]["mode"] == "fixed" and "search-only" in doc["latency_scope"]


def test_one_gram_export():
    bundle = build_bundle([BootlegScore(0, [5, 5, 6])], 2)
    export = export_distribution(bundle, SearchConfig.fixed(1))
    assert export.counts.tolist() == [2, 1]
    assert export.rows() == [(1, 2), (2, 1)]


def test_fixed_exports_share_total_mass():
    rng = np.random.default_rng(2)
    scores, manifest, plain, _ = random_corpus(rng)
    bundle = build_bundle(scores, 4, manifest=manifest)
    for n in range(1, 5):
        export = export_distribution(bundle, SearchConfig.fixed(n))
        assert export.total == sum(max(0, len(w) - n + 1) for w in plain.values())
        assert list(export.counts) == sorted(export.counts, reverse=True)
        expected = sorted((brute_count(plain, g) for g in
                           {g for w in plain.values() for g in ngrams(w, n)}), reverse=True)
        assert export.counts.tolist() == expected


def test_dynamic_export_matches_enumeration():
    rng = np.random.default_rng(8)
    scores, manifest, plain, _ = random_corpus(rng)
    bundle = build_bundle(scores, 4, manifest=manifest)
    from collections import Counter
    emitted = Counter()
    capped = set()
    for words in plain.values():
        for _, key, _, cap in brute_dynamic(plain, words, 3, 4):
            if cap:
                capped.add(key)
            else:
                emitted[key] += 1
    export = export_distribution(bundle, SearchConfig.dynamic(gamma=3))
    assert export.counts.tolist() == sorted(emitted.values(), reverse=True)
    assert export.capped_keys == len(capped)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([1, 2, 3, 5]))
def test_dynamic_peak_not_above_one_gram_peak(seed, gamma):
    rng = np.random.default_rng(seed)
    scores, manifest, _, _ = random_corpus(rng)
    bundle = build_bundle(scores, 4, manifest=manifest)
    # emissions of a key never exceed its occurrences, which never exceed those
    # of its first word, so the bound holds with or without cap-forced keys
    cfg = SearchConfig.dynamic(gamma=gamma)
    one = export_distribution(bundle, SearchConfig.fixed(1))
    assert export_distribution(bundle, cfg, exclude_capped=False).peak <= one.peak
    assert export_distribution(bundle, cfg).peak <= min(one.peak, gamma)


def test_include_capped_adds_mass():
    corpus = [BootlegScore(0, [1] * 10)]
    bundle = build_bundle(corpus, 2)
    cfg = SearchConfig.dynamic(gamma=2, n_max=2)
    without = export_distribution(bundle, cfg)
    with_capped = export_distribution(bundle, cfg, exclude_capped=False)
    assert without.total == 0 and without.capped_keys == 2
    assert with_capped.total == 10
