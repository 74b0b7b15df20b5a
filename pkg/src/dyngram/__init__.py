"""Dynamic n-gram fingerprinting and histogram-of-offsets search for
bootleg-score sheet music corpora."""

from .errors import (
    BundleChecksumError,
    BundleError,
    BundleFormatError,
    BundleTruncatedError,
    BundleVersionError,
    DyngramError,
    IndexAbsentError,
    IngestError,
    UsageError,
)
from .evaluate import (
    DistributionExport,
    EvalReport,
    evaluate,
    export_distribution,
    mean_reciprocal_rank,
)
from .index import IndexBundle, NGramIndex, Posting, build_bundle, build_index, load_bundle, save_bundle
from .ingest import Query, QuerySet, ingest_corpus, load_queries
from .model import BootlegScore, CorpusManifest, FingerprintKey, Piece, pack_word, unpack_word
from .search import (
    QueryFingerprint,
    RankedResult,
    SearchConfig,
    make_dynamic_fingerprints,
    make_fixed_fingerprints,
    rank_of,
    score_search,
    search,
)

__version__ = "0.1.0"
