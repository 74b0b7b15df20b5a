import hashlib

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from dyngram.errors import (
    BundleChecksumError,
    BundleFormatError,
    BundleTruncatedError,
    BundleVersionError,
    IndexAbsentError,
    UsageError,
)
from dyngram.index import (
    MAGIC,
    Posting,
    build_bundle,
    build_index,
    hash_keys,
    load_bundle,
    save_bundle,
)
from dyngram.model import BootlegScore, FingerprintKey
from oracles import brute_postings, ngrams, random_corpus

A, B, C = 101, 202, 303


def test_three_gram_single_key():
    idx = build_index([BootlegScore(7, [A, B, C])], 3)
    assert idx.n_keys == 1
    assert idx.lookup((A, B, C)) == [Posting(7, 0)]


def test_repeated_word_postings():
    idx = build_index([BootlegScore(1, [A, A, A])], 1)
    assert idx.lookup((A,)) == [Posting(1, 0), Posting(1, 1), Posting(1, 2)]
    assert idx.count(FingerprintKey((A,))) == 3


def test_two_pdfs_two_grams():
    corpus = [BootlegScore(1, [A, B]), BootlegScore(2, [B, A])]
    idx = build_index(corpus, 2)
    plain = {1: [A, B], 2: [B, A]}
    assert [(p.pdf_id, p.offset) for p in idx.lookup((A, B))] == brute_postings(plain, (A, B))
    assert idx.lookup((A, B)) == [Posting(1, 0)]
    assert idx.lookup((B, A)) == [Posting(2, 0)]
    assert idx.count((A, B)) == 1
    assert idx.n_keys == 2


def test_absent_key_and_n_mismatch():
    idx = build_index([BootlegScore(1, [A, B])], 1)
    assert idx.lookup((C,)) == [] and idx.count((C,)) == 0
    with pytest.raises(UsageError):
        idx.lookup((A, B))


def test_short_pdfs_contribute_nothing():
    idx = build_index([BootlegScore(1, [A]), BootlegScore(2, [])], 2)
    assert idx.n_keys == 0 and idx.n_postings == 0
    with pytest.raises(UsageError):
        build_index([], 0)


def test_bundle_sizes():
    corpus = [BootlegScore(1, [A, B, C, A, B]), BootlegScore(2, [C, C])]
    assert build_bundle(corpus, 4).ns == [1, 2, 3, 4]
    assert build_bundle(corpus, 1).ns == [1]
    with pytest.raises(UsageError):
        build_bundle(corpus, 6)


def test_posting_lists_sorted():
    rng = np.random.default_rng(0)
    scores, manifest, _, _ = random_corpus(rng, alphabet=3)
    for n in (1, 2, 3):
        idx = build_index(scores, n)
        for _, postings in idx.items():
            assert postings == sorted(postings)


def test_hash_collisions_do_not_merge_keys():
    # distinct keys forced into one hash bucket must stay separate
    idx = build_index([BootlegScore(1, [A, B, C])], 1)
    keys = np.array(idx.keys)
    h = np.zeros(idx.n_keys, dtype=np.uint64)
    order = np.argsort(keys[:, 0])
    from dyngram.index import NGramIndex
    forced = NGramIndex(1, keys[order], h, np.arange(idx.n_keys + 1),
                        np.zeros(3, np.int32), np.arange(3, dtype=np.int32), idx.pdf_ids)
    import dyngram.index as mod
    real = mod.hash_keys
    try:
        mod.hash_keys = lambda k: np.zeros(len(k), dtype=np.uint64)
        rows = forced.find_rows(np.array([[A], [B], [C], [999]], dtype=np.uint64))
    finally:
        mod.hash_keys = real
    assert [forced.keys[r, 0] if r >= 0 else None for r in rows] == [A, B, C, None]


def test_hash_depends_on_every_word():
    keys = np.array([[1, 2, 3], [1, 2, 4], [2, 2, 3]], dtype=np.uint64)
    assert len(set(hash_keys(keys).tolist())) == 3


@settings(max_examples=60, suppress_health_check=[HealthCheck.too_slow], deadline=None)
@given(st.integers(0, 2**32))
def test_lookup_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    scores, manifest, plain, vocab = random_corpus(rng)
    bundle = build_bundle(scores, 4, manifest=manifest)
    for n in range(1, 5):
        idx = bundle.index(n)
        total = sum(max(0, len(w) - n + 1) for w in plain.values())
        assert idx.n_postings == total == int(idx.counts.sum())
        seen = {g for w in plain.values() for g in ngrams(w, n)}
        assert idx.n_keys == len(seen)
        # a few absent keys too
        probes = list(seen) + [tuple(vocab[int(i)] for i in rng.integers(len(vocab), size=n))
                               for _ in range(5)]
        for key in probes:
            got = [(p.pdf_id, p.offset) for p in idx.lookup(key)]
            assert got == brute_postings(plain, key)
            assert idx.count(key) == len(got)


def test_threaded_build_identical():
    rng = np.random.default_rng(5)
    scores, manifest, _, _ = random_corpus(rng, max_pdfs=20)
    single = build_bundle(scores, 4, manifest=manifest)
    for threads in (2, 3, 7):
        shuffled = [scores[i] for i in rng.permutation(len(scores))]
        multi = build_bundle(shuffled, 4, manifest=manifest, threads=threads)
        assert multi.same_as(single)


def test_corpus_reconstruction():
    rng = np.random.default_rng(9)
    scores, manifest, plain, _ = random_corpus(rng)
    bundle = build_bundle(scores, 2, manifest=manifest)
    assert {s.pdf_id: s.words.tolist() for s in bundle.corpus()} == plain


def two_pdf_bundle():
    return build_bundle([BootlegScore(1, [A, B]), BootlegScore(2, [B, A])], 4)


def test_round_trip_two_pdfs(tmp_path):
    bundle = two_pdf_bundle()
    save_bundle(bundle, tmp_path / "b.idx")
    loaded = load_bundle(tmp_path / "b.idx")
    assert loaded.same_as(bundle)
    for n in bundle.ns:
        for key, postings in bundle.index(n).items():
            assert loaded.index(n).lookup(key) == postings
    assert loaded.params["n_max"] == 4 and loaded.params["gamma_default"] == 1000


def test_absent_index_after_load(tmp_path):
    save_bundle(two_pdf_bundle(), tmp_path / "b.idx")
    loaded = load_bundle(tmp_path / "b.idx")
    with pytest.raises(IndexAbsentError, match="index absent"):
        loaded.index(5)


def test_save_is_deterministic(tmp_path):
    bundle = two_pdf_bundle()
    save_bundle(bundle, tmp_path / "a.idx")
    save_bundle(two_pdf_bundle(), tmp_path / "b.idx")
    digest = lambda p: hashlib.sha256(p.read_bytes()).hexdigest()
    assert digest(tmp_path / "a.idx") == digest(tmp_path / "b.idx")


@pytest.fixture
def saved(tmp_path):
    path = tmp_path / "b.idx"
    save_bundle(two_pdf_bundle(), path)
    return path


def test_bad_magic(saved):
    data = bytearray(saved.read_bytes())
    data[0] ^= 0xFF
    saved.write_bytes(bytes(data))
    with pytest.raises(BundleFormatError):
        load_bundle(saved)


def test_bad_version(saved):
    data = bytearray(saved.read_bytes())
    data[len(MAGIC)] = 99
    saved.write_bytes(bytes(data))
    with pytest.raises(BundleVersionError):
        load_bundle(saved)


@pytest.mark.parametrize("keep", [4, 12, 40, -1])
def test_truncated(saved, keep):
    data = saved.read_bytes()
    saved.write_bytes(data[:keep])
    expected = BundleFormatError if 0 <= keep < len(MAGIC) else BundleTruncatedError
    with pytest.raises(expected):
        load_bundle(saved)


def test_checksum(saved):
    data = bytearray(saved.read_bytes())
    data[len(data) // 2] ^= 0x01
    saved.write_bytes(bytes(data))
    with pytest.raises(BundleChecksumError):
        load_bundle(saved)


def test_empty_bundle_round_trip(tmp_path):
    bundle = build_bundle([], 4)
    save_bundle(bundle, tmp_path / "e.idx")
    loaded = load_bundle(tmp_path / "e.idx")
    assert loaded.same_as(bundle) and loaded.index(1).n_keys == 0
