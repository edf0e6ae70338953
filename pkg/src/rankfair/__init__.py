"""rankfair: measure gender bias in embedding-based job-title ranking.

The toolkit compares the rankings a model produces for the feminine versus
the masculine form of the same job-title query over a constant corpus
(uniform rank-biased overlap), reports task quality (mean average
precision) split by query gender, and builds the gender-annotated test sets
the comparison needs via template-induced translation.
"""

from ._version import __version__
from .errors import (
    ProviderError,
    RankfairError,
    TranslationBackendError,
    UsageError,
    ValidationError,
)
from .evaluation import (
    EvalRun,
    InspectionTable,
    MatrixResult,
    PairResult,
    evaluate_matrix,
    evaluate_pair,
    evaluate_run,
    inspect_top_k,
)
from .metrics import (
    MetricScore,
    average_precision,
    mean_average_precision,
    overlap_at_depth,
    rbo_exponential,
    rbo_uniform,
    reversed_list_rbo,
)
from .providers import (
    EmbeddingCache,
    FileProvider,
    HttpProvider,
    ProviderSpec,
    SyntheticProvider,
    make_provider,
    synthetic_embed,
)
from .retrieval import cosine, normalize, rank_corpus
from .testset import (
    CorpusItem,
    CorpusView,
    GenderTag,
    GenderView,
    QueryPair,
    TestSet,
    gender_view,
    load_test_set,
    summarize,
    test_set_digest,
    write_test_set,
)

__all__ = [
    "__version__",
    "RankfairError",
    "ValidationError",
    "ProviderError",
    "TranslationBackendError",
    "UsageError",
    "MetricScore",
    "overlap_at_depth",
    "rbo_uniform",
    "rbo_exponential",
    "reversed_list_rbo",
    "average_precision",
    "mean_average_precision",
    "cosine",
    "normalize",
    "rank_corpus",
    "ProviderSpec",
    "SyntheticProvider",
    "FileProvider",
    "HttpProvider",
    "EmbeddingCache",
    "make_provider",
    "synthetic_embed",
    "GenderTag",
    "CorpusView",
    "QueryPair",
    "CorpusItem",
    "TestSet",
    "GenderView",
    "gender_view",
    "load_test_set",
    "write_test_set",
    "test_set_digest",
    "summarize",
    "EvalRun",
    "PairResult",
    "MatrixResult",
    "InspectionTable",
    "evaluate_pair",
    "evaluate_run",
    "evaluate_matrix",
    "inspect_top_k",
]
