"""Fingerprint frequency distributions: 1-grams have a heavy head, dynamic
n-grams are flattened to at most gamma occurrences per key.

Writes rank,count CSVs to the working directory.

Run:  python3 demos/04_distribution.py
"""
from dyngram import SearchConfig, build_bundle
from dyngram.evaluate import export_distribution
from dyngram.synth import make_corpus

corpus = make_corpus(n_pieces=300, seed=0)
bundle = build_bundle(corpus.scores, 4, manifest=corpus.manifest)

for config, out in [(SearchConfig.fixed(1), "dist_1gram.csv"),
                    (SearchConfig.dynamic(gamma=1000), "dist_dynamic.csv")]:
    export = export_distribution(bundle, config)
    export.write_csv(out)
    head = ", ".join(str(c) for _, c in export.rows()[:5])
    print(f"{config.label}: {len(export.counts)} keys, peak {export.peak}, "
          f"top counts [{head}], {export.capped_keys} cap-forced keys left out -> {out}")
