"""Accuracy and cost of fixed n-gram lookups against dynamic n-grams.

Short n-grams are frequent, so every lookup drags in long posting lists.
Long n-grams are cheap but a noisy word spoils every n-gram that covers it.
The dynamic rule extends each n-gram only until its posting list is short
enough.  The synthetic Markov corpus is easy to tell apart, so accuracy
saturates here and the columns to compare are time and postings.

Run:  python3 demos/02_fixed_vs_dynamic.py
"""
from dyngram import SearchConfig, build_bundle, evaluate
from dyngram.synth import make_corpus, make_queries

corpus = make_corpus(n_pieces=300, seed=0)
bundle = build_bundle(corpus.scores, 4, manifest=corpus.manifest)
queries = make_queries(corpus, n_queries=200, noise=0.15, seed=3)

configs = [SearchConfig.fixed(n) for n in (1, 2, 3, 4)] + [SearchConfig.dynamic(gamma=1000)]
print(f"{'config':<30}{'MRR':>8}{'ms/query':>10}{'postings':>10}")
for config in configs:
    report = evaluate(queries, bundle, config)
    print(f"{config.label:<30}{report.mrr:>8.4f}{report.latency_mean * 1e3:>10.2f}"
          f"{report.mean_postings:>10.0f}")
