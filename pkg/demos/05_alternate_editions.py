"""Find a piece from a different edition than the one the query came from.

Half the pieces get a second PDF with 10% of words replaced.  Queries are
taken from one PDF and that PDF is excluded at search time, so only the
other edition can match.

Run:  python3 demos/05_alternate_editions.py
"""
from dyngram import SearchConfig, build_bundle, evaluate
from dyngram.synth import make_corpus, make_queries

corpus = make_corpus(n_pieces=300, editions=0.5, edition_noise=0.1, seed=0)
bundle = build_bundle(corpus.scores, 4, manifest=corpus.manifest)
queries = make_queries(corpus, n_queries=300, seed=5)

for config in (SearchConfig.fixed(1), SearchConfig.fixed(4), SearchConfig.dynamic(gamma=1000)):
    same = evaluate(queries, bundle, config, condition=1)
    other = evaluate(queries, bundle, config, condition=2)
    print(f"{config.label:<30} own pdf MRR {same.mrr:.4f}   "
          f"other edition MRR {other.mrr:.4f} over {len(other.records)} queries")
