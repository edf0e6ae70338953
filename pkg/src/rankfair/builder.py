"""Test-set construction via template-induced translation.

Source job titles (from a language without gender marking on nouns) are
wrapped in gender-unambiguous carrier sentences, translated by a pluggable
backend into the target language once per gender, stripped back down to the
bare title, lowercased, deduplicated, and merged into neutral records when
both genders translate identically.  Relevance judgments follow the source
ids through dedup by lineage.

The real translation service sits behind ``HttpTranslationBackend``; a
table-driven ``MockTableBackend`` makes builds reproducible and testable
offline.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import requests

from .errors import TranslationBackendError, ValidationError
from .testset import CorpusItem, GenderTag, QueryPair, TestSet

PLACEHOLDER = "{job_title}"

DEFAULT_MASCULINE_TEMPLATE = "He is: {job_title}."
DEFAULT_FEMININE_TEMPLATE = "She is: {job_title}."

_TERMINAL_PUNCTUATION = ".!?…"

# Scaffold prefixes the default templates produce under common translations.
# Rules apply longest-first to already-lowercased text; colon-less variants
# back up the colon ones.  Unrecognized scaffolds flag the record instead of
# guessing.
DEFAULT_STRIP_RULES: dict[str, dict[str, list[str]]] = {
    "es": {"prefixes": ["él es:", "ella es:", "él es", "ella es"], "suffixes": []},
    "de": {"prefixes": ["er ist:", "sie ist:", "er ist", "sie ist"], "suffixes": []},
    "fr": {
        "prefixes": ["il est :", "elle est :", "il est:", "elle est:", "il est", "elle est"],
        "suffixes": [],
    },
    "pt": {"prefixes": ["ele é:", "ela é:", "ele é", "ela é"], "suffixes": []},
}


class RecordFlagged(ValidationError):
    """A translated record could not be normalized and needs human review."""


@dataclass(frozen=True)
class StripRules:
    """Ordered scaffold removals for one language, matched on lowercase text."""

    prefixes: tuple[str, ...] = ()
    suffixes: tuple[str, ...] = ()

    @classmethod
    def for_language(
        cls, language: str, overrides: Mapping[str, Mapping[str, Sequence[str]]] | None = None
    ) -> "StripRules":
        table = dict(DEFAULT_STRIP_RULES)
        if overrides:
            table.update({lang: dict(rules) for lang, rules in overrides.items()})
        rules = table.get(language, {})
        return cls(
            prefixes=tuple(rules.get("prefixes", ())),
            suffixes=tuple(rules.get("suffixes", ())),
        )


@dataclass(frozen=True)
class TemplatePair:
    """The two carrier sentences plus per-language strip rules."""

    masculine_template: str = DEFAULT_MASCULINE_TEMPLATE
    feminine_template: str = DEFAULT_FEMININE_TEMPLATE
    strip_rules: Mapping[str, Mapping[str, Sequence[str]]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name, template in (
            ("masculine_template", self.masculine_template),
            ("feminine_template", self.feminine_template),
        ):
            if template.count(PLACEHOLDER) != 1:
                raise ValidationError(
                    f"{name} must contain {PLACEHOLDER!r} exactly once: {template!r}"
                )

    def template(self, gender: GenderTag) -> str:
        if gender is GenderTag.MASCULINE:
            return self.masculine_template
        if gender is GenderTag.FEMININE:
            return self.feminine_template
        raise ValidationError("templates exist only for feminine and masculine")

    def rules_for(self, language: str) -> StripRules:
        return StripRules.for_language(language, self.strip_rules)


def load_templates(path: str | Path) -> TemplatePair:
    """Read a template definition file (JSON)."""
    with Path(path).open(encoding="utf-8") as fh:
        data = json.load(fh)
    return TemplatePair(
        masculine_template=data.get("masculine_template", DEFAULT_MASCULINE_TEMPLATE),
        feminine_template=data.get("feminine_template", DEFAULT_FEMININE_TEMPLATE),
        strip_rules=data.get("strip_rules", {}),
    )


def wrap(templates: TemplatePair, title: str, gender: GenderTag) -> str:
    """Substitute the title into the carrier sentence for one gender."""
    if not title or not title.strip():
        raise ValidationError("cannot wrap an empty job title")
    return templates.template(gender).replace(PLACEHOLDER, title)


def strip_and_normalize(translated: str, rules: StripRules) -> str:
    """Reduce a translated carrier sentence to the bare lowercase job title.

    Longest matching prefix rule wins; terminal punctuation and surrounding
    whitespace always come off; internal text is never touched.  Raises
    ``RecordFlagged`` when the result is empty or still looks like scaffold.
    """
    # str.lower() is the Unicode default mapping, which is correct for the
    # supported languages; only Turkish-style dotted-i would need tailoring.
    text = translated.strip().lower()
    for prefix in sorted(rules.prefixes, key=len, reverse=True):
        if prefix and text.startswith(prefix):
            text = text[len(prefix):].lstrip()
            break
    for suffix in sorted(rules.suffixes, key=len, reverse=True):
        if suffix and text.endswith(suffix):
            text = text[: -len(suffix)].rstrip()
            break
    text = text.strip().rstrip(_TERMINAL_PUNCTUATION).strip()
    if not text:
        raise RecordFlagged(f"nothing left after stripping {translated!r}")
    if ":" in text:
        raise RecordFlagged(f"unrecognized template scaffold in {translated!r}")
    return text


# ---------------------------------------------------------------------------
# Translation backends
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TranslationRequest:
    """Everything a backend may need for one gendered translation."""

    title: str
    wrapped: str
    gender: GenderTag
    language: str
    source_language: str = "en"


class MockTableBackend:
    """Deterministic table-driven backend.

    The table is JSONL of {"source", "gender", "language", "translation"},
    keyed by the bare source title.  Missing entries are errors: a mock that
    silently invents translations would hide fixture gaps.
    """

    kind = "mock_table"

    def __init__(self, table: Mapping[tuple[str, str, str], str]):
        self._table = dict(table)

    @classmethod
    def from_file(cls, path: str | Path) -> "MockTableBackend":
        table: dict[tuple[str, str, str], str] = {}
        with Path(path).open(encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, 1):
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    record = json.loads(raw)
                    key = (record["source"], record["gender"], record["language"])
                    table[key] = record["translation"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise ValidationError(f"{path}:{line_no}: bad mock translation row") from exc
        return cls(table)

    def translate(self, request: TranslationRequest) -> str:
        key = (request.title, request.gender.value, request.language)
        try:
            return self._table[key]
        except KeyError:
            raise TranslationBackendError(
                f"mock table has no translation for {key!r}"
            ) from None


class HttpTranslationBackend:
    """POSTs the wrapped sentence to a translation endpoint, with retries."""

    kind = "http"

    def __init__(
        self,
        endpoint: str,
        timeout: float = 30.0,
        retries: int = 2,
        retry_wait: float = 0.5,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.timeout = float(timeout)
        self.retries = int(retries)
        self.retry_wait = float(retry_wait)
        self._session = session or requests.Session()

    def translate(self, request: TranslationRequest) -> str:
        payload = {
            "text": request.wrapped,
            "source": request.source_language,
            "target": request.language,
        }
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                response = self._session.post(self.endpoint, json=payload, timeout=self.timeout)
                if response.status_code != 200:
                    raise TranslationBackendError(
                        f"POST {self.endpoint} returned {response.status_code}"
                    )
                body = response.json()
                translation = body["translation"]
                if not isinstance(translation, str):
                    raise TranslationBackendError("translation field is not a string")
                return translation
            except (requests.RequestException, ValueError, KeyError) as exc:
                last_error = exc
            except TranslationBackendError as exc:
                last_error = exc
            if attempt < self.retries:
                time.sleep(self.retry_wait)
        raise TranslationBackendError(
            f"translation failed after {self.retries + 1} attempts: {last_error}"
        )


def make_backend(descriptor: str, **http_options) -> MockTableBackend | HttpTranslationBackend:
    """``mock:<table path>`` or ``http:<endpoint url>``."""
    kind, sep, rest = descriptor.partition(":")
    if not sep:
        raise ValidationError(f"backend descriptor needs a kind prefix: {descriptor!r}")
    if kind == "mock":
        return MockTableBackend.from_file(rest)
    if kind == "http":
        return HttpTranslationBackend(rest, **http_options)
    raise ValidationError(f"unknown backend kind {kind!r} in {descriptor!r}")


# ---------------------------------------------------------------------------
# Merge, dedup, reporting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MergedRecord:
    id: str
    feminine: str
    masculine: str
    neutral: bool
    merged_source_ids: tuple[str, ...]  # every source id this record absorbed


@dataclass(frozen=True)
class FlaggedRecord:
    source_id: str
    title: str
    gender: str
    raw_translation: str
    reason: str

    def as_dict(self) -> dict:
        return {
            "source_id": self.source_id,
            "title": self.title,
            "gender": self.gender,
            "raw_translation": self.raw_translation,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class SectionReport:
    """Build tally for one record section (queries or corpus)."""

    inputs: int
    paired: int
    neutral: int
    duplicates_removed: int
    flagged: int

    @property
    def total(self) -> int:
        return 2 * self.paired + self.neutral

    def conserves(self) -> bool:
        return self.inputs == self.paired + self.neutral + self.duplicates_removed + self.flagged

    def as_dict(self) -> dict:
        return {
            "inputs": self.inputs,
            "paired": self.paired,
            "neutral": self.neutral,
            "duplicates_removed": self.duplicates_removed,
            "flagged": self.flagged,
            "total": self.total,
        }


@dataclass(frozen=True)
class BuildReport:
    language: str
    queries: SectionReport
    corpus: SectionReport
    flagged_records: tuple[FlaggedRecord, ...] = ()

    def as_dict(self) -> dict:
        return {
            "language": self.language,
            "queries": self.queries.as_dict(),
            "corpus": self.corpus.as_dict(),
            "flagged_records": [f.as_dict() for f in self.flagged_records],
        }


def merge_and_dedup(
    records: Iterable[tuple[str, str, str]]
) -> tuple[list[MergedRecord], dict[str, str], int]:
    """Collapse duplicate (feminine, masculine) pairs and tag neutral ones.

    First occurrence wins; later duplicates are dropped and their source ids
    redirect to the kept record.  Returns (merged records, source id ->
    kept id lineage, duplicates removed).
    """
    merged: list[MergedRecord] = []
    by_pair: dict[tuple[str, str], int] = {}
    lineage: dict[str, str] = {}
    duplicates = 0
    for source_id, feminine, masculine in records:
        key = (feminine, masculine)
        if key in by_pair:
            index = by_pair[key]
            kept = merged[index]
            merged[index] = MergedRecord(
                id=kept.id,
                feminine=kept.feminine,
                masculine=kept.masculine,
                neutral=kept.neutral,
                merged_source_ids=kept.merged_source_ids + (source_id,),
            )
            lineage[source_id] = kept.id
            duplicates += 1
        else:
            by_pair[key] = len(merged)
            merged.append(
                MergedRecord(
                    id=source_id,
                    feminine=feminine,
                    masculine=masculine,
                    neutral=feminine == masculine,
                    merged_source_ids=(source_id,),
                )
            )
            lineage[source_id] = source_id
    return merged, lineage, duplicates


# ---------------------------------------------------------------------------
# Full pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SourceRecord:
    id: str
    title: str
    relevant: tuple[str, ...] = ()


def load_source_dataset(path: str | Path) -> list[SourceRecord]:
    """Read the source-language dataset: JSONL of {"id","title","relevant"}.

    Records carrying a non-empty "relevant" list serve as queries; every
    record joins the candidate pool.
    """
    records: list[SourceRecord] = []
    seen: set[str] = set()
    with Path(path).open(encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, 1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                data = json.loads(raw)
                record = SourceRecord(
                    id=str(data["id"]),
                    title=data["title"],
                    relevant=tuple(str(r) for r in data.get("relevant", ())),
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValidationError(f"{path}:{line_no}: bad source record") from exc
            if not record.title or not record.title.strip():
                raise ValidationError(f"{path}:{line_no}: empty title")
            if record.id in seen:
                raise ValidationError(f"{path}:{line_no}: duplicate source id {record.id!r}")
            seen.add(record.id)
            records.append(record)
    if not records:
        raise ValidationError(f"{path}: no source records")
    for record in records:
        for target in record.relevant:
            if target not in seen:
                raise ValidationError(
                    f"{path}: record {record.id!r} marks unknown id {target!r} relevant"
                )
    return records


@dataclass(frozen=True)
class _Translated:
    source_id: str
    feminine: str
    masculine: str


def _write_partial(path: Path, rows: list[dict]) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def build_test_set(
    source_path: str | Path,
    language: str,
    templates: TemplatePair,
    backend,
    *,
    partial_path: str | Path | None = None,
) -> tuple[TestSet, BuildReport]:
    """Run wrap -> translate -> strip -> merge/dedup and remap judgments.

    Each source title is translated once per gender and the result is shared
    by its query and corpus roles.  On backend failure the raw translations
    collected so far are written to ``partial_path`` (rows in the mock-table
    format, so a rerun can resume from them) before the error propagates.
    """
    records = load_source_dataset(source_path)
    rules = templates.rules_for(language)

    translated: dict[str, _Translated] = {}
    flagged: list[FlaggedRecord] = []
    progress_rows: list[dict] = []

    for record in records:
        forms: dict[GenderTag, str] = {}
        failure: FlaggedRecord | None = None
        for gender in (GenderTag.FEMININE, GenderTag.MASCULINE):
            wrapped = wrap(templates, record.title, gender)
            request = TranslationRequest(
                title=record.title, wrapped=wrapped, gender=gender, language=language
            )
            try:
                raw = backend.translate(request)
            except TranslationBackendError as exc:
                if partial_path is not None:
                    _write_partial(Path(partial_path), progress_rows)
                raise TranslationBackendError(
                    f"source {record.id!r} ({gender.value}): {exc}"
                ) from exc
            progress_rows.append(
                {
                    "source": record.title,
                    "gender": gender.value,
                    "language": language,
                    "translation": raw,
                }
            )
            try:
                forms[gender] = strip_and_normalize(raw, rules)
            except RecordFlagged as exc:
                failure = FlaggedRecord(
                    source_id=record.id,
                    title=record.title,
                    gender=gender.value,
                    raw_translation=raw,
                    reason=str(exc),
                )
                break
        if failure is not None:
            flagged.append(failure)
            continue
        translated[record.id] = _Translated(
            source_id=record.id,
            feminine=forms[GenderTag.FEMININE],
            masculine=forms[GenderTag.MASCULINE],
        )

    query_records = [r for r in records if r.relevant]
    corpus_inputs = [
        (t.source_id, t.feminine, t.masculine)
        for t in (translated[r.id] for r in records if r.id in translated)
    ]
    query_inputs = [
        (t.source_id, t.feminine, t.masculine)
        for t in (translated[r.id] for r in query_records if r.id in translated)
    ]

    corpus_merged, corpus_lineage, corpus_dups = merge_and_dedup(corpus_inputs)
    query_merged, _query_lineage, query_dups = merge_and_dedup(query_inputs)

    corpus_items = [
        CorpusItem(id=m.id, feminine=m.feminine, masculine=m.masculine, neutral=m.neutral)
        for m in corpus_merged
    ]
    source_by_id = {r.id: r for r in records}
    queries = []
    judgments: dict[str, frozenset[str]] = {}
    for m in query_merged:
        queries.append(
            QueryPair(
                id=m.id,
                feminine=m.feminine,
                masculine=m.masculine,
                neutral=m.neutral,
                source_text=source_by_id[m.id].title,
            )
        )
        # A merged query represents every source title it absorbed, so it
        # inherits the union of their judgments, redirected through the
        # corpus lineage; targets that were flagged away are dropped.
        relevant: set[str] = set()
        for source_id in m.merged_source_ids:
            for target in source_by_id[source_id].relevant:
                kept = corpus_lineage.get(target)
                if kept is not None:
                    relevant.add(kept)
        if relevant:
            judgments[m.id] = frozenset(relevant)

    test_set = TestSet(
        language=language,
        queries=tuple(queries),
        corpus=tuple(corpus_items),
        judgments=judgments,
    )

    query_flagged = sum(1 for f in flagged if source_by_id[f.source_id].relevant)
    report = BuildReport(
        language=language,
        queries=SectionReport(
            inputs=len(query_records),
            paired=sum(1 for m in query_merged if not m.neutral),
            neutral=sum(1 for m in query_merged if m.neutral),
            duplicates_removed=query_dups,
            flagged=query_flagged,
        ),
        corpus=SectionReport(
            inputs=len(records),
            paired=sum(1 for m in corpus_merged if not m.neutral),
            neutral=sum(1 for m in corpus_merged if m.neutral),
            duplicates_removed=corpus_dups,
            flagged=len(flagged),
        ),
        flagged_records=tuple(flagged),
    )
    return test_set, report
