"""Command-line interface: ``dyngram build|query|bench|stats``."""
from __future__ import annotations

import argparse
import logging
import math
import sys

from .errors import DyngramError, UsageError
from .evaluate import evaluate, export_distribution
from .index import DEFAULT_GAMMA, DEFAULT_N_MAX, MAX_N, build_bundle, load_bundle, save_bundle
from .ingest import ingest_corpus, load_feature_file, load_queries, parse_word
from .search import SearchConfig, search

def _gamma(text: str) -> float:
    if text.lower() in ("inf", "infinity", "none"):
        return math.inf
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("gamma must be a positive integer or 'inf'")
    return value

def _add_search_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("search configuration")
    g.add_argument("--mode", default="dynamic",
                   help="'dynamic' (default; the best-accuracy, lowest-latency setting) "
                        "or 'fixed:N' for the fixed n-gram baselines, N = 1..5")
    g.add_argument("--gamma", type=_gamma, default=DEFAULT_GAMMA,
                   help="dynamic mode: largest posting count a lookup may process before "
                        "the n-gram is extended (default %(default)s; 'inf' never extends)")
    g.add_argument("--n-max", type=int, default=DEFAULT_N_MAX,
                   help="dynamic mode: longest n-gram tried (default %(default)s, "
                        "the largest index built by default)")
    g.add_argument("--bin-width", type=int, default=1,
                   help="width of relative-offset histogram bins (default %(default)s: exact offsets)")

def _config(args, **extra) -> SearchConfig:
    return SearchConfig.parse_mode(args.mode, gamma=args.gamma, n_max=args.n_max,
                                   bin_width=args.bin_width, **extra)

def cmd_build(args) -> int:
    manifest, corpus = ingest_corpus(args.manifest, args.features, threads=args.threads)
    bundle = build_bundle(corpus, args.n_max, manifest=manifest,
                          gamma_default=DEFAULT_GAMMA, threads=args.threads)
    save_bundle(bundle, args.out)
    s = bundle.summary()
    print(f"pieces    {s['pieces']}")
    print(f"pdfs      {s['pdfs']}")
    print(f"words     {s['words']}")
    for n in bundle.ns:
        print(f"{n}-gram    {s['postings'][n]} postings, {s['keys'][n]} keys")
    print(f"wrote {args.out}")
    return 0

def _query_words(args):
    if args.feature_file:
        if args.words:
            raise UsageError("give either words or --feature-file, not both")
        return load_feature_file(args.feature_file).words
    words = []
    for i, tok in enumerate(args.words):
        try:
            w = parse_word(tok, f"word {i}")
        except DyngramError as exc:
            raise UsageError(str(exc)) from None
        if w:
            words.append(w)
    return words

def cmd_query(args) -> int:
    bundle = load_bundle(args.bundle)
    config = _config(args, exclude_pdf=args.exclude_pdf)
    words = _query_words(args)
    if len(words) == 0:
        print("dyngram query: warning: empty query, every piece scores 0", file=sys.stderr)
    result = search(words, bundle, config)
    names = {p.piece_id: p.name for p in bundle.manifest.pieces}
    print(f"# {config.label}: {result.fingerprints} fingerprints, "
          f"{result.postings} postings, {result.elapsed * 1e3:.2f} ms")
    for rank, (piece, score) in enumerate(result.top(args.top), 1):
        print(f"{rank:>4}  {piece:>8}  {score:>6}  {names.get(piece, '')}")
    return 0

def cmd_bench(args) -> int:
    bundle = load_bundle(args.bundle)
    queries = load_queries(args.queries, bundle.manifest)
    config = _config(args)
    condition = 2 if args.exclude_truth_pdf else 1
    report = evaluate(queries, bundle, config, condition=condition, workers=args.workers)
    if args.report:
        report.write_json(args.report)
    if args.csv:
        report.write_csv(args.csv)
    print(report.summary())
    return 0

def cmd_stats(args) -> int:
    bundle = load_bundle(args.bundle)
    config = _config(args)
    export = export_distribution(bundle, config, exclude_capped=not args.include_capped)
    export.write_csv(args.out)
    print(f"{export.label}: {len(export.counts)} distinct fingerprints, "
          f"{export.total} occurrences, peak {export.peak}")
    if export.capped_keys:
        state = "included" if args.include_capped else "excluded"
        print(f"{export.capped_keys} cap-forced keys above gamma {state}")
    print(f"wrote {args.out}")
    return 0

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyngram",
        description="Dynamic n-gram fingerprint search over bootleg-score corpora.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="ingest features and write an index bundle")
    p.add_argument("--manifest", required=True, help="corpus manifest (JSON)")
    p.add_argument("--features", required=True, help="directory of <pdf_id>.json feature files")
    p.add_argument("--out", required=True, help="bundle file to write")
    p.add_argument("--n-max", type=int, default=DEFAULT_N_MAX,
                   help=f"build n-gram indexes 1..N (default %(default)s; {MAX_N} for the "
                        "fixed 5-gram baseline)")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for loading and index construction (default %(default)s)")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("query", help="rank pieces for one query")
    p.add_argument("--bundle", required=True)
    p.add_argument("words", nargs="*", help="query words (decimal or 0x-hex)")
    p.add_argument("--feature-file", help="read the query from a feature file instead")
    p.add_argument("--top", type=int, default=10, help="pieces to print (default %(default)s)")
    p.add_argument("--exclude-pdf", type=int, help="leave this pdf id out of the search")
    _add_search_flags(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("bench", help="evaluate a query set: MRR and latency")
    p.add_argument("--bundle", required=True)
    p.add_argument("--queries", required=True, help="query file (JSON)")
    p.add_argument("--report", help="write the full report as JSON")
    p.add_argument("--csv", help="write per-query records as CSV")
    p.add_argument("--exclude-truth-pdf", action="store_true",
                   help="alternate-edition condition: drop each query's own PDF and keep "
                        "only queries whose piece has another PDF")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel query threads; >1 disables latency reporting")
    _add_search_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stats", help="export the fingerprint frequency distribution as CSV")
    p.add_argument("--bundle", required=True)
    p.add_argument("--out", required=True, help="CSV file with columns rank,count")
    p.add_argument("--include-capped", action="store_true",
                   help="dynamic mode: keep cap-forced keys whose count exceeds gamma")
    _add_search_flags(p)
    p.set_defaults(func=cmd_stats)
    return parser

def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"dyngram {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (DyngramError, OSError) as exc:
        print(f"dyngram {args.command}: error: {exc}", file=sys.stderr)
        return 1

if __name__ == "__main__":
    sys.exit(main())
