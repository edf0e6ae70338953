"""Deterministic synthetic test sets for calibration and benchmarks.

Generated sets pair with the synthetic gender-dial provider: paired surface
forms carry the ``#f`` / ``#m`` marker the provider understands, neutral
items a bare lemma, so the dial's weight is the single knob controlling how
gender-marked every string embeds.

``make_language_fixture`` produces sets whose pair/neutral counts follow the
published per-language statistics shape (queries and corpus sizes for de,
es, fr, pt), which makes count-invariant audits meaningful at real scale.
"""

from __future__ import annotations

import random

from .testset import CorpusItem, QueryPair, TestSet

# (query pairs, query neutral), (corpus pairs, corpus neutral)
TABLE_SHAPES: dict[str, tuple[tuple[int, int], tuple[int, int]]] = {
    "de": ((99, 5), (2264, 201)),
    "es": ((81, 23), (2052, 557)),
    "fr": ((60, 44), (1566, 985)),
    "pt": ((75, 29), (1703, 899)),
}


def make_synthetic_test_set(
    language: str = "xx",
    query_pairs: int = 20,
    query_neutral: int = 5,
    corpus_pairs: int = 80,
    corpus_neutral: int = 20,
    seed: int = 0,
    max_relevant: int = 4,
) -> TestSet:
    """Build a synthetic gender-annotated test set.

    Every query receives 1..max_relevant relevant corpus items drawn with a
    seeded RNG, so MAP is always defined and reruns are identical.
    """
    rng = random.Random(seed)
    queries: list[QueryPair] = []
    for i in range(query_pairs):
        lemma = f"query role {i:04d}"
        queries.append(
            QueryPair(id=f"q{i:04d}", feminine=f"{lemma}#f", masculine=f"{lemma}#m", neutral=False)
        )
    for i in range(query_pairs, query_pairs + query_neutral):
        lemma = f"query role {i:04d}"
        queries.append(QueryPair(id=f"q{i:04d}", feminine=lemma, masculine=lemma, neutral=True))

    corpus: list[CorpusItem] = []
    for i in range(corpus_pairs):
        lemma = f"corpus role {i:04d}"
        corpus.append(
            CorpusItem(id=f"c{i:04d}", feminine=f"{lemma}#f", masculine=f"{lemma}#m", neutral=False)
        )
    for i in range(corpus_pairs, corpus_pairs + corpus_neutral):
        lemma = f"corpus role {i:04d}"
        corpus.append(CorpusItem(id=f"c{i:04d}", feminine=lemma, masculine=lemma, neutral=True))

    corpus_ids = [c.id for c in corpus]
    cap = min(max_relevant, len(corpus_ids))
    judgments = {
        q.id: frozenset(rng.sample(corpus_ids, rng.randint(1, cap))) for q in queries
    }
    return TestSet(
        language=language, queries=tuple(queries), corpus=tuple(corpus), judgments=judgments
    )


def make_language_fixture(language: str, seed: int | None = None) -> TestSet:
    """A synthetic set with the published count shape for one language."""
    if language not in TABLE_SHAPES:
        raise KeyError(f"no shape on record for language {language!r}")
    (q_pairs, q_neutral), (c_pairs, c_neutral) = TABLE_SHAPES[language]
    if seed is None:
        seed = sum(ord(ch) for ch in language)
    return make_synthetic_test_set(
        language=language,
        query_pairs=q_pairs,
        query_neutral=q_neutral,
        corpus_pairs=c_pairs,
        corpus_neutral=c_neutral,
        seed=seed,
    )


def gender_dial_fixture() -> TestSet:
    """The fixed fixture for gender-dial sweeps; do not change its shape.

    Sweep behaviour (bias score 1.0 at weight 0, monotone non-increasing,
    below 0.95 by weight 2 with the dial provider at dim 64, seed 11) is
    pinned by the acceptance suite against exactly this set.
    """
    return make_synthetic_test_set(
        language="xx",
        query_pairs=40,
        query_neutral=10,
        corpus_pairs=160,
        corpus_neutral=40,
        seed=7,
    )


def desk_scale_fixture() -> TestSet:
    """200 paired queries against a 5,000-item view, for scale checks."""
    return make_synthetic_test_set(
        language="xx",
        query_pairs=200,
        query_neutral=0,
        corpus_pairs=4600,
        corpus_neutral=400,
        seed=2024,
        max_relevant=8,
    )
