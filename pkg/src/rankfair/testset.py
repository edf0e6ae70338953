"""Gender-annotated test-set model: records, file format, validation, views.

A test set bundles gendered query pairs, a corpus of candidate job titles
(each with feminine/masculine surface forms, or a single neutral form), and
binary relevance judgments keyed by item identity.  The on-disk container is
UTF-8 JSONL: one header line, then ``query``, ``corpus`` and ``judgment``
records.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping

from .errors import ValidationError

FORMAT_VERSION = 1


class GenderTag(str, Enum):
    FEMININE = "feminine"
    MASCULINE = "masculine"
    NEUTRAL = "neutral"


class CorpusView(str, Enum):
    """Which surface form paired corpus items contribute to a ranking pool."""

    MASCULINE = "masculine_corpus"
    FEMININE = "feminine_corpus"


def _check_surface(text: str, what: str) -> None:
    if not text or not text.strip():
        raise ValidationError(f"{what}: surface form is empty")
    if text != text.lower():
        raise ValidationError(f"{what}: surface form {text!r} is not lowercase")
    if "{job_title}" in text:
        raise ValidationError(f"{what}: surface form {text!r} contains template scaffold")


@dataclass(frozen=True)
class QueryPair:
    """One query job title with both gendered surface forms.

    ``neutral`` is true exactly when the two forms coincide; such queries are
    kept in the set (they count toward totals) but are treated specially by
    the bias evaluation.
    """

    id: str
    feminine: str
    masculine: str
    neutral: bool
    source_text: str = ""

    def __post_init__(self) -> None:
        _check_surface(self.feminine, f"query {self.id}")
        _check_surface(self.masculine, f"query {self.id}")
        if self.neutral != (self.feminine == self.masculine):
            raise ValidationError(
                f"query {self.id}: neutral={self.neutral} inconsistent with forms "
                f"{self.feminine!r} / {self.masculine!r}"
            )

    def form(self, gender: GenderTag) -> str:
        if gender is GenderTag.FEMININE:
            return self.feminine
        if gender is GenderTag.MASCULINE:
            return self.masculine
        raise ValueError("gender must be feminine or masculine")


@dataclass(frozen=True)
class CorpusItem:
    """One candidate job title with both gendered surface forms."""

    id: str
    feminine: str
    masculine: str
    neutral: bool

    def __post_init__(self) -> None:
        _check_surface(self.feminine, f"corpus item {self.id}")
        _check_surface(self.masculine, f"corpus item {self.id}")
        if self.neutral != (self.feminine == self.masculine):
            raise ValidationError(
                f"corpus item {self.id}: neutral={self.neutral} inconsistent with forms "
                f"{self.feminine!r} / {self.masculine!r}"
            )

    def surface(self, view: CorpusView) -> str:
        return self.masculine if view is CorpusView.MASCULINE else self.feminine


@dataclass(frozen=True)
class GenderView:
    """A corpus rendered entirely in one gender's surface forms.

    ``items`` preserves corpus file order; that order is the downstream
    tie-break, so both views break ties identically.
    """

    view: CorpusView
    items: tuple[tuple[str, str], ...]  # (corpus id, surface string)

    def __len__(self) -> int:
        return len(self.items)

    @property
    def ids(self) -> list[str]:
        return [item_id for item_id, _ in self.items]

    @property
    def surfaces(self) -> list[str]:
        return [surface for _, surface in self.items]


@dataclass(frozen=True)
class TestSet:
    """A validated test set: queries, corpus, judgments, all ids resolved."""

    __test__ = False  # domain class, not a pytest collectable

    language: str
    queries: tuple[QueryPair, ...]
    corpus: tuple[CorpusItem, ...]
    judgments: Mapping[str, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        # Canonical judgment form: frozensets, no empty entries.
        normalized = {
            query_id: frozenset(relevant)
            for query_id, relevant in self.judgments.items()
            if relevant
        }
        object.__setattr__(self, "judgments", normalized)
        validate_test_set(self)

    def relevant_for(self, query_id: str) -> frozenset[str]:
        return self.judgments.get(query_id, frozenset())


@dataclass(frozen=True)
class TestSetSummary:
    """M/F-pair, neutral and total counts for queries and corpus."""

    __test__ = False  # domain class, not a pytest collectable

    language: str
    query_pairs: int
    query_neutral: int
    corpus_pairs: int
    corpus_neutral: int

    @property
    def query_total(self) -> int:
        return 2 * self.query_pairs + self.query_neutral

    @property
    def corpus_total(self) -> int:
        return 2 * self.corpus_pairs + self.corpus_neutral

    def as_dict(self) -> dict:
        return {
            "language": self.language,
            "queries": {
                "pairs": self.query_pairs,
                "neutral": self.query_neutral,
                "total": self.query_total,
            },
            "corpus": {
                "pairs": self.corpus_pairs,
                "neutral": self.corpus_neutral,
                "total": self.corpus_total,
            },
        }


def validate_test_set(ts: TestSet) -> None:
    """Check cross-record invariants; per-record ones run at construction."""
    if not ts.language or not ts.language.islower() or len(ts.language) != 2:
        raise ValidationError(f"language must be a two-letter lowercase code, got {ts.language!r}")

    seen_q: set[str] = set()
    for q in ts.queries:
        if q.id in seen_q:
            raise ValidationError(f"duplicate query id {q.id!r}")
        seen_q.add(q.id)

    seen_c: set[str] = set()
    for c in ts.corpus:
        if c.id in seen_c:
            raise ValidationError(f"duplicate corpus id {c.id!r}")
        seen_c.add(c.id)

    for query_id, relevant in ts.judgments.items():
        if query_id not in seen_q:
            raise ValidationError(f"judgment references unknown query id {query_id!r}")
        for item_id in relevant:
            if item_id not in seen_c:
                raise ValidationError(
                    f"judgment for query {query_id!r} references unknown corpus id {item_id!r}"
                )


# ---------------------------------------------------------------------------
# JSONL container
# ---------------------------------------------------------------------------


def _parse_line(line_no: int, raw: str) -> dict:
    try:
        record = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"line {line_no}: malformed JSON ({exc.msg})") from exc
    if not isinstance(record, dict) or "kind" not in record:
        raise ValidationError(f"line {line_no}: expected an object with a \"kind\" field")
    return record


def _require(record: dict, line_no: int, *names: str) -> list:
    values = []
    for name in names:
        if name not in record:
            raise ValidationError(f"line {line_no}: missing field {name!r}")
        values.append(record[name])
    return values


def load_test_set(path: str | Path) -> TestSet:
    """Load and validate a test set from its JSONL container.

    Errors carry the offending line number so bad fixtures are easy to fix.
    """
    path = Path(path)
    queries: list[QueryPair] = []
    corpus: list[CorpusItem] = []
    judgments: dict[str, frozenset[str]] = {}
    language = None

    with path.open(encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, 1):
            raw = raw.strip()
            if not raw:
                continue
            record = _parse_line(line_no, raw)
            kind = record["kind"]

            if language is None:
                if kind != "header":
                    raise ValidationError(
                        f"line {line_no}: first record must be the header"
                    )
                (language,) = _require(record, line_no, "language")
                version = record.get("version", FORMAT_VERSION)
                if version != FORMAT_VERSION:
                    raise ValidationError(f"line {line_no}: unsupported container version {version}")
                continue

            if kind == "header":
                raise ValidationError(f"line {line_no}: duplicate header")
            if kind == "query":
                item_id, fem, masc, neutral = _require(
                    record, line_no, "id", "feminine", "masculine", "neutral"
                )
                try:
                    queries.append(
                        QueryPair(
                            id=str(item_id),
                            feminine=fem,
                            masculine=masc,
                            neutral=bool(neutral),
                            source_text=record.get("source_text", ""),
                        )
                    )
                except ValidationError as exc:
                    raise ValidationError(f"line {line_no}: {exc}") from exc
            elif kind == "corpus":
                item_id, fem, masc, neutral = _require(
                    record, line_no, "id", "feminine", "masculine", "neutral"
                )
                try:
                    corpus.append(
                        CorpusItem(id=str(item_id), feminine=fem, masculine=masc, neutral=bool(neutral))
                    )
                except ValidationError as exc:
                    raise ValidationError(f"line {line_no}: {exc}") from exc
            elif kind == "judgment":
                query_id, relevant = _require(record, line_no, "query_id", "relevant")
                if str(query_id) in judgments:
                    raise ValidationError(f"line {line_no}: duplicate judgment for query {query_id!r}")
                judgments[str(query_id)] = frozenset(str(r) for r in relevant)
            else:
                raise ValidationError(f"line {line_no}: unknown record kind {kind!r}")

    if language is None:
        raise ValidationError(f"{path}: empty file, expected a header line")

    try:
        return TestSet(
            language=language,
            queries=tuple(queries),
            corpus=tuple(corpus),
            judgments=judgments,
        )
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from exc


def _dump(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def serialize_test_set(ts: TestSet) -> str:
    """Render the canonical JSONL text for a test set.

    Canonical means: header, queries in set order, corpus in set order, then
    one judgment line per judged query in query order with the relevant ids
    sorted.  Loading followed by serializing is a fixed point.
    """
    lines = [_dump({"kind": "header", "language": ts.language, "version": FORMAT_VERSION})]
    for q in ts.queries:
        record = {
            "kind": "query",
            "id": q.id,
            "feminine": q.feminine,
            "masculine": q.masculine,
            "neutral": q.neutral,
        }
        if q.source_text:
            record["source_text"] = q.source_text
        lines.append(_dump(record))
    for c in ts.corpus:
        lines.append(
            _dump(
                {
                    "kind": "corpus",
                    "id": c.id,
                    "feminine": c.feminine,
                    "masculine": c.masculine,
                    "neutral": c.neutral,
                }
            )
        )
    for q in ts.queries:
        relevant = ts.judgments.get(q.id)
        if relevant:
            lines.append(_dump({"kind": "judgment", "query_id": q.id, "relevant": sorted(relevant)}))
    return "\n".join(lines) + "\n"


def write_test_set(ts: TestSet, path: str | Path) -> None:
    Path(path).write_text(serialize_test_set(ts), encoding="utf-8")


def test_set_digest(ts: TestSet) -> str:
    """SHA-256 of the canonical serialization; identifies a set in reports."""
    return hashlib.sha256(serialize_test_set(ts).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Derived structures
# ---------------------------------------------------------------------------


def gender_view(ts: TestSet, view: CorpusView) -> GenderView:
    """Render the corpus in one gender: paired items contribute the selected
    form, neutral items their single form, order preserved."""
    view = CorpusView(view)
    return GenderView(view=view, items=tuple((c.id, c.surface(view)) for c in ts.corpus))


def summarize(ts: TestSet) -> TestSetSummary:
    """Count M/F pairs and neutral items; totals follow as 2*pairs + neutral."""
    query_neutral = sum(1 for q in ts.queries if q.neutral)
    corpus_neutral = sum(1 for c in ts.corpus if c.neutral)
    return TestSetSummary(
        language=ts.language,
        query_pairs=len(ts.queries) - query_neutral,
        query_neutral=query_neutral,
        corpus_pairs=len(ts.corpus) - corpus_neutral,
        corpus_neutral=corpus_neutral,
    )
