"""Build an index over a small synthetic corpus and look up one noisy excerpt.

Run:  python3 demos/01_quickstart.py
"""
from dyngram import SearchConfig, build_bundle, search
from dyngram.synth import make_corpus, make_queries

corpus = make_corpus(n_pieces=200, seed=0)
print(f"corpus: {len(corpus.scores)} pdfs, {corpus.n_words} bootleg words")

# indexes for n = 1..4; the dynamic search picks among them per query position
bundle = build_bundle(corpus.scores, 4, manifest=corpus.manifest)

query = make_queries(corpus, n_queries=1, seed=7)[0]
print(f"query {query.query_id}: {len(query.words)} words cut from pdf {query.pdf_id} "
      f"(piece {query.piece_id}), 5% of words have a flipped bit")

result = search(query.words, bundle, SearchConfig.dynamic(gamma=1000))
print(f"{result.fingerprints} fingerprints, {result.postings} postings, "
      f"{result.elapsed * 1e3:.2f} ms")
for rank, (piece, score) in enumerate(result.top(5), 1):
    mark = "  <- truth" if piece == query.piece_id else ""
    print(f"  {rank}. piece {piece:>4}  score {score}{mark}")
