"""How the posting budget gamma trades lookup cost for nothing much in accuracy.

Run:  python3 demos/03_gamma_sweep.py
"""
import math

from dyngram import SearchConfig, build_bundle, evaluate
from dyngram.synth import make_corpus, make_queries

corpus = make_corpus(n_pieces=300, seed=0)
bundle = build_bundle(corpus.scores, 4, manifest=corpus.manifest)
queries = make_queries(corpus, n_queries=200, seed=4)

print(f"{'gamma':>8}{'MRR':>8}{'ms/query':>10}{'postings':>10}")
for gamma in (10, 100, 1000, 10000, math.inf):
    report = evaluate(queries, bundle, SearchConfig.dynamic(gamma=gamma))
    print(f"{gamma:>8}{report.mrr:>8.4f}{report.latency_mean * 1e3:>10.2f}"
          f"{report.mean_postings:>10.0f}")
