"""Bias evaluation: rank the same corpus view with both query genders,
compare the rankings, aggregate per gender.

For every gendered query pair the corpus view is ranked once with the
feminine form and once with the masculine form; the two full-depth rankings
are conjoint by construction (same view), so their uniform RBO is always
defined.  Pair scores average into the run's bias score; average precision
against the identity-level judgments gives MAP split by query gender.

Neutral queries (identical surface forms) are excluded from the RBO average
by default, because their two rankings are trivially identical and a forced
1.0 would dilute the signal; they still count toward MAP.  The
``include_neutral_in_rbo`` flag flips that policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import RankfairError, ValidationError
from .metrics import MetricScore, average_precision, rbo_uniform
from .providers import Provider
from .retrieval import rank_matrix
from .testset import CorpusView, GenderView, QueryPair, TestSet, gender_view, test_set_digest

SKIP_NEUTRAL = "neutral_query"
SKIP_NO_RELEVANT = "no_relevant_items"


@dataclass(frozen=True)
class PairResult:
    """Outcome of one gendered query pair against one corpus view."""

    query_id: str
    rbo: MetricScore | None
    ap_feminine: MetricScore | None
    ap_masculine: MetricScore | None
    skipped_reason: str | None = None

    def as_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "rbo": self.rbo.as_dict() if self.rbo else None,
            "ap_feminine": self.ap_feminine.as_dict() if self.ap_feminine else None,
            "ap_masculine": self.ap_masculine.as_dict() if self.ap_masculine else None,
            "skipped_reason": self.skipped_reason,
        }

    @classmethod
    def from_dict(cls, record: dict) -> "PairResult":
        def score(value):
            return MetricScore.from_dict(value) if value else None

        return cls(
            query_id=record["query_id"],
            rbo=score(record.get("rbo")),
            ap_feminine=score(record.get("ap_feminine")),
            ap_masculine=score(record.get("ap_masculine")),
            skipped_reason=record.get("skipped_reason"),
        )


@dataclass(frozen=True)
class RunCounts:
    """How many pairs fed each average and how many were skipped."""

    rbo_evaluated: int
    rbo_skipped: int
    map_evaluated: int
    map_skipped: int

    def as_dict(self) -> dict:
        return {
            "rbo_evaluated": self.rbo_evaluated,
            "rbo_skipped": self.rbo_skipped,
            "map_evaluated": self.map_evaluated,
            "map_skipped": self.map_skipped,
        }


@dataclass(frozen=True)
class EvalRun:
    """One (test set, model, corpus view) evaluation."""

    language: str
    model_name: str
    corpus_view: str
    pair_results: tuple[PairResult, ...]
    mean_rbo: MetricScore
    map_feminine: MetricScore
    map_masculine: MetricScore
    counts: RunCounts
    metadata: Mapping[str, object] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "language": self.language,
            "model_name": self.model_name,
            "corpus_view": self.corpus_view,
            "mean_rbo": self.mean_rbo.as_dict(),
            "map_feminine": self.map_feminine.as_dict(),
            "map_masculine": self.map_masculine.as_dict(),
            "counts": self.counts.as_dict(),
            "metadata": dict(self.metadata),
            "pair_results": [pair.as_dict() for pair in self.pair_results],
        }

    @classmethod
    def from_dict(cls, record: dict) -> "EvalRun":
        return cls(
            language=record["language"],
            model_name=record["model_name"],
            corpus_view=record["corpus_view"],
            pair_results=tuple(PairResult.from_dict(p) for p in record.get("pair_results", [])),
            mean_rbo=MetricScore.from_dict(record["mean_rbo"]),
            map_feminine=MetricScore.from_dict(record["map_feminine"]),
            map_masculine=MetricScore.from_dict(record["map_masculine"]),
            counts=RunCounts(**record["counts"]),
            metadata=record.get("metadata", {}),
        )


@dataclass(frozen=True)
class EmbeddedView:
    """A gender view embedded once and shared by both query genders."""

    view: GenderView
    ids: tuple[str, ...]
    matrix: np.ndarray  # (|view|, dim), unit rows

    @classmethod
    def build(cls, view: GenderView, provider: Provider) -> "EmbeddedView":
        matrix = provider.embed_batch(view.surfaces, role="passage")
        return cls(view=view, ids=tuple(view.ids), matrix=matrix)


def _rank(embedded: EmbeddedView, query_vec: np.ndarray) -> list[str]:
    return rank_matrix(query_vec, list(embedded.ids), embedded.matrix).ids


def evaluate_pair(
    pair: QueryPair,
    view: GenderView,
    provider: Provider,
    judgments: Mapping[str, frozenset[str]],
    *,
    embedded: EmbeddedView | None = None,
    include_neutral_in_rbo: bool = False,
) -> PairResult:
    """Score one query pair against one corpus view.

    ``embedded`` carries the precomputed corpus embeddings; evaluate_run
    passes it so the corpus is embedded exactly once per run.
    """
    if embedded is None:
        embedded = EmbeddedView.build(view, provider)
    try:
        vecs = provider.embed_batch([pair.feminine, pair.masculine], role="query")
    except RankfairError as exc:
        raise type(exc)(f"query {pair.id}: {exc}") from exc
    return _score_pair(
        pair, vecs[0], vecs[1], embedded, judgments,
        include_neutral_in_rbo=include_neutral_in_rbo,
    )


def _score_pair(
    pair: QueryPair,
    fem_vec: np.ndarray,
    masc_vec: np.ndarray,
    embedded: EmbeddedView,
    judgments: Mapping[str, frozenset[str]],
    *,
    include_neutral_in_rbo: bool,
) -> PairResult:
    ranking_f = _rank(embedded, fem_vec)
    ranking_m = _rank(embedded, masc_vec)
    if len(ranking_f) != len(ranking_m) or set(ranking_f) != set(ranking_m):
        raise ValidationError(
            f"query {pair.id}: rankings are not conjoint; this is a pipeline bug"
        )

    skipped_reason = None
    if pair.neutral and not include_neutral_in_rbo:
        rbo = None
        skipped_reason = SKIP_NEUTRAL
    else:
        rbo = rbo_uniform(ranking_f, ranking_m)

    relevant = judgments.get(pair.id) or frozenset()
    if relevant:
        ap_f = average_precision(ranking_f, relevant)
        ap_m = average_precision(ranking_m, relevant)
    else:
        ap_f = ap_m = None
        skipped_reason = skipped_reason or SKIP_NO_RELEVANT

    return PairResult(
        query_id=pair.id,
        rbo=rbo,
        ap_feminine=ap_f,
        ap_masculine=ap_m,
        skipped_reason=skipped_reason,
    )


def evaluate_run(
    test_set: TestSet,
    view: CorpusView,
    provider: Provider,
    *,
    include_neutral_in_rbo: bool = False,
) -> EvalRun:
    """Run the full methodology for one test set, view and provider.

    The corpus view is embedded exactly once and all query texts go through
    the provider in two batched calls (one per gender), so a remote provider
    sees a handful of requests per run instead of one per pair.
    """
    view = CorpusView(view)
    gview = gender_view(test_set, view)
    embedded = EmbeddedView.build(gview, provider)

    if not test_set.queries:
        raise ValidationError("test set has no queries")
    fem_vecs = provider.embed_batch([q.feminine for q in test_set.queries], role="query")
    masc_vecs = provider.embed_batch([q.masculine for q in test_set.queries], role="query")

    results = [
        _score_pair(
            pair,
            fem_vecs[i],
            masc_vecs[i],
            embedded,
            test_set.judgments,
            include_neutral_in_rbo=include_neutral_in_rbo,
        )
        for i, pair in enumerate(test_set.queries)
    ]

    rbo_scores = [r.rbo for r in results if r.rbo is not None]
    if not rbo_scores:
        raise ValidationError("no query pair contributed an RBO score (all skipped)")
    aps_f = [r.ap_feminine for r in results if r.ap_feminine is not None]
    aps_m = [r.ap_masculine for r in results if r.ap_masculine is not None]
    if not aps_f:
        raise ValidationError("no query had relevant items; MAP is undefined")

    def mean_of(scores: list[MetricScore], name: str) -> MetricScore:
        value = math.fsum(score.value for score in scores) / len(scores)
        return MetricScore(value=value, metric=name, depth=len(gview))

    return EvalRun(
        language=test_set.language,
        model_name=provider.spec.model_name,
        corpus_view=view.value,
        pair_results=tuple(results),
        mean_rbo=mean_of(rbo_scores, "mean_rbo_uniform"),
        map_feminine=mean_of(aps_f, "map_feminine"),
        map_masculine=mean_of(aps_m, "map_masculine"),
        counts=RunCounts(
            rbo_evaluated=len(rbo_scores),
            rbo_skipped=len(results) - len(rbo_scores),
            map_evaluated=len(aps_f),
            map_skipped=len(results) - len(aps_f),
        ),
        metadata={
            "provider": provider.spec.as_dict(),
            "test_set_digest": test_set_digest(test_set),
            "include_neutral_in_rbo": include_neutral_in_rbo,
        },
    )


@dataclass(frozen=True)
class MatrixFailure:
    """One failed cell of the evaluation matrix."""

    language: str
    model_name: str
    corpus_view: str
    error: str

    def as_dict(self) -> dict:
        return {
            "language": self.language,
            "model_name": self.model_name,
            "corpus_view": self.corpus_view,
            "error": self.error,
        }


@dataclass(frozen=True)
class MatrixResult:
    runs: tuple[EvalRun, ...]
    failures: tuple[MatrixFailure, ...]

    @property
    def complete(self) -> bool:
        return not self.failures


def evaluate_matrix(
    test_sets: Sequence[TestSet],
    providers: Sequence[Provider],
    views: Iterable[CorpusView] = (CorpusView.MASCULINE, CorpusView.FEMININE),
    *,
    include_neutral_in_rbo: bool = False,
) -> MatrixResult:
    """Evaluate every (test set, provider, view) combination.

    Failures are collected per cell and the rest of the matrix continues;
    the result is flagged partial instead of aborting the sweep.
    """
    views = [CorpusView(v) for v in views]
    if not test_sets or not providers or not views:
        raise ValidationError("matrix needs at least one test set, provider and view")
    runs: list[EvalRun] = []
    failures: list[MatrixFailure] = []
    for test_set in test_sets:
        for provider in providers:
            for view in views:
                try:
                    runs.append(
                        evaluate_run(
                            test_set,
                            view,
                            provider,
                            include_neutral_in_rbo=include_neutral_in_rbo,
                        )
                    )
                except RankfairError as exc:
                    failures.append(
                        MatrixFailure(
                            language=test_set.language,
                            model_name=provider.spec.model_name,
                            corpus_view=view.value,
                            error=str(exc),
                        )
                    )
    return MatrixResult(runs=tuple(runs), failures=tuple(failures))


@dataclass(frozen=True)
class InspectionRow:
    rank: int
    feminine_result: str
    masculine_result: str

    @property
    def differs(self) -> bool:
        return self.feminine_result != self.masculine_result


@dataclass(frozen=True)
class InspectionTable:
    """Side-by-side top-k results for one query's two gender forms."""

    query_id: str
    feminine_query: str
    masculine_query: str
    corpus_view: str
    rbo: MetricScore
    rows: tuple[InspectionRow, ...]


def inspect_top_k(
    pair: QueryPair,
    view: GenderView,
    provider: Provider,
    k: int,
    *,
    embedded: EmbeddedView | None = None,
) -> InspectionTable:
    """Aligned top-k surface strings for the feminine vs masculine query.

    The full view is ranked (no pre-filtering), then truncated for display;
    the reported RBO is still the full-depth pair score.
    """
    if k < 1 or k > len(view):
        raise ValidationError(f"k={k} out of range for view of size {len(view)}")
    if embedded is None:
        embedded = EmbeddedView.build(view, provider)
    surfaces = dict(view.items)
    vecs = provider.embed_batch([pair.feminine, pair.masculine], role="query")
    ranking_f = _rank(embedded, vecs[0])
    ranking_m = _rank(embedded, vecs[1])
    rows = tuple(
        InspectionRow(rank=i + 1, feminine_result=surfaces[ranking_f[i]],
                      masculine_result=surfaces[ranking_m[i]])
        for i in range(k)
    )
    return InspectionTable(
        query_id=pair.id,
        feminine_query=pair.feminine,
        masculine_query=pair.masculine,
        corpus_view=view.view.value,
        rbo=rbo_uniform(ranking_f, ranking_m),
        rows=rows,
    )
