"""Render evaluation runs as model-by-language tables plus inspection views.

One table shape per metric: bias scores (mean uniform RBO) get one column
per language; MAP gets two sub-columns per language (feminine and masculine
queries) plus a cross-language model average.  Cells are fixed 4-decimal
strings; each column's best cell is marked ``max`` and worst ``min`` (ties
share the mark).  Markdown, CSV (RFC 4180) and JSON renderings carry exactly
the same numeric strings; only JSON adds values and metadata.

Rendering is a pure function of the runs: no clock or locale leaks into
cell values, and the optional timestamp lives in metadata only.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from ._version import __version__
from .errors import ValidationError
from .evaluation import EvalRun, InspectionTable
from .testset import CorpusView

MISSING = "—"

MARK_MAX = "max"
MARK_MIN = "min"
MARK_DIFF = "diff"


@dataclass(frozen=True)
class Cell:
    text: str
    value: float | None = None
    mark: str | None = None


@dataclass(frozen=True)
class ReportRow:
    label: str
    cells: tuple[Cell, ...]


@dataclass(frozen=True)
class ReportDocument:
    title: str
    columns: tuple[str, ...]  # first entry is the row-label column header
    rows: tuple[ReportRow, ...]
    footnotes: tuple[str, ...] = ()
    metadata: Mapping[str, object] = field(default_factory=dict)


def _fmt(value: float) -> str:
    return f"{value:.4f}"


def _mark_columns(rows: list[list[Cell]], markable: set[int]) -> None:
    """Attach max/min marks per column, in place; ties all get the mark."""
    for col in markable:
        values = [(i, row[col].value) for i, row in enumerate(rows) if row[col].value is not None]
        if not values:
            continue
        high = max(v for _, v in values)
        low = min(v for _, v in values)
        for i, v in values:
            if v == high:
                rows[i][col] = Cell(rows[i][col].text, v, MARK_MAX)
            elif v == low:
                rows[i][col] = Cell(rows[i][col].text, v, MARK_MIN)


def _grid(
    runs: Sequence[EvalRun], view: CorpusView
) -> tuple[list[str], list[str], dict[tuple[str, str], EvalRun]]:
    view = CorpusView(view)
    selected = [run for run in runs if run.corpus_view == view.value]
    if not selected:
        raise ValidationError(f"no runs for corpus view {view.value!r}")
    cells: dict[tuple[str, str], EvalRun] = {}
    for run in selected:
        key = (run.model_name, run.language)
        if key in cells:
            raise ValidationError(
                f"duplicate run for model {run.model_name!r}, language {run.language!r}, "
                f"view {view.value!r}"
            )
        cells[key] = run
    models = sorted({model for model, _ in cells})
    languages = sorted({lang for _, lang in cells})
    return models, languages, cells


def _metadata(runs: Sequence[EvalRun], metric: str, view: CorpusView, timestamp: str | None) -> dict:
    providers: dict[str, object] = {}
    for run in runs:
        spec = run.metadata.get("provider") if run.metadata else None
        providers.setdefault(run.model_name, spec or {"model_name": run.model_name})
    return {
        "metric": metric,
        "corpus_view": CorpusView(view).value,
        "tool_version": __version__,
        "generated_at": timestamp,
        "providers": [providers[name] for name in sorted(providers)],
        "test_set_digests": sorted(
            {str(run.metadata.get("test_set_digest", "")) for run in runs if run.metadata}
        ),
    }


def render_rbo_table(
    runs: Sequence[EvalRun], view: CorpusView, timestamp: str | None = None
) -> ReportDocument:
    """Bias-score table: one row per model, one column per language."""
    view = CorpusView(view)
    models, languages, cells = _grid(runs, view)
    rows: list[list[Cell]] = []
    for model in models:
        row = []
        for lang in languages:
            run = cells.get((model, lang))
            if run is None:
                row.append(Cell(MISSING))
            else:
                value = run.mean_rbo.value
                row.append(Cell(_fmt(value), value))
        rows.append(row)
    _mark_columns(rows, set(range(len(languages))))
    gender = "masculine" if view is CorpusView.MASCULINE else "feminine"
    footnotes = []
    if any(cell.text == MISSING for row in rows for cell in row):
        footnotes.append("Missing cells are shown as " + MISSING + ".")
    return ReportDocument(
        title=f"Bias score (mean uniform RBO, feminine vs masculine queries), {gender} corpus",
        columns=("Model",) + tuple(lang.upper() for lang in languages),
        rows=tuple(
            ReportRow(label=model, cells=tuple(row)) for model, row in zip(models, rows)
        ),
        footnotes=tuple(footnotes),
        metadata=_metadata(runs, "rbo", view, timestamp),
    )


def render_map_table(
    runs: Sequence[EvalRun], view: CorpusView, timestamp: str | None = None
) -> ReportDocument:
    """MAP table: F and M sub-columns per language plus the model average."""
    view = CorpusView(view)
    models, languages, cells = _grid(runs, view)
    rows: list[list[Cell]] = []
    any_missing = False
    for model in models:
        row: list[Cell] = []
        present: list[float] = []
        for lang in languages:
            run = cells.get((model, lang))
            if run is None:
                row.extend([Cell(MISSING), Cell(MISSING)])
                any_missing = True
            else:
                f_value = run.map_feminine.value
                m_value = run.map_masculine.value
                row.append(Cell(_fmt(f_value), f_value))
                row.append(Cell(_fmt(m_value), m_value))
                present.extend([f_value, m_value])
        if present:
            average = math.fsum(present) / len(present)
            row.append(Cell(_fmt(average), average))
        else:
            row.append(Cell(MISSING))
            any_missing = True
        rows.append(row)
    # Mark the per-language sub-columns; the derived average stays unmarked.
    _mark_columns(rows, set(range(2 * len(languages))))
    columns = ["Model"]
    for lang in languages:
        columns.extend([f"{lang.upper()} F", f"{lang.upper()} M"])
    columns.append("Avg")
    footnotes = []
    if any_missing:
        footnotes.append(
            "Missing cells are shown as " + MISSING + " and excluded from model averages."
        )
    gender = "masculine" if view is CorpusView.MASCULINE else "feminine"
    return ReportDocument(
        title=f"MAP by query gender (F = feminine, M = masculine queries), {gender} corpus",
        columns=tuple(columns),
        rows=tuple(ReportRow(label=model, cells=tuple(row)) for model, row in zip(models, rows)),
        footnotes=tuple(footnotes),
        metadata=_metadata(runs, "map", view, timestamp),
    )


def render_inspection(table: InspectionTable, timestamp: str | None = None) -> ReportDocument:
    """Aligned top-k columns for one query pair; diverging rows are marked."""
    rows = []
    for row in table.rows:
        mark = MARK_DIFF if row.differs else None
        rows.append(
            ReportRow(
                label=str(row.rank),
                cells=(
                    Cell(row.feminine_result, mark=mark),
                    Cell(row.masculine_result, mark=mark),
                ),
            )
        )
    return ReportDocument(
        title=f"Top {len(table.rows)} results for query {table.query_id!r}",
        columns=(
            "Rank",
            f"{table.feminine_query} (f)",
            f"{table.masculine_query} (m)",
        ),
        rows=tuple(rows),
        footnotes=(
            f"Pair RBO (uniform, full depth): {_fmt(table.rbo.value)}",
            f"Corpus view: {table.corpus_view}",
        ),
        metadata={
            "metric": "inspection",
            "corpus_view": table.corpus_view,
            "tool_version": __version__,
            "generated_at": timestamp,
            "query_id": table.query_id,
            "rbo": table.rbo.value,
        },
    )


# ---------------------------------------------------------------------------
# Output formats
# ---------------------------------------------------------------------------


def _markdown_cell(cell: Cell) -> str:
    if cell.mark == MARK_MAX:
        return f"**{cell.text}**"
    if cell.mark == MARK_MIN:
        return f"<u>{cell.text}</u>"
    if cell.mark == MARK_DIFF:
        return f"*{cell.text}*"
    return cell.text


def to_markdown(doc: ReportDocument) -> str:
    lines = [f"### {doc.title}", ""]
    lines.append("| " + " | ".join(doc.columns) + " |")
    lines.append("|" + "|".join([" --- "] * len(doc.columns)) + "|")
    for row in doc.rows:
        rendered = [row.label] + [_markdown_cell(cell) for cell in row.cells]
        lines.append("| " + " | ".join(rendered) + " |")
    for note in doc.footnotes:
        lines.append("")
        lines.append(f"*{note}*")
    return "\n".join(lines) + "\n"


def to_csv(doc: ReportDocument) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(doc.columns)
    for row in doc.rows:
        writer.writerow([row.label] + [cell.text for cell in row.cells])
    return buffer.getvalue()


def to_json(doc: ReportDocument) -> str:
    payload = {
        "title": doc.title,
        "columns": list(doc.columns),
        "rows": [
            {
                "label": row.label,
                "cells": [
                    {"text": cell.text, "value": cell.value, "mark": cell.mark}
                    for cell in row.cells
                ],
            }
            for row in doc.rows
        ],
        "footnotes": list(doc.footnotes),
        "metadata": dict(doc.metadata),
    }
    return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


RENDERERS: dict[str, Callable[[ReportDocument], str]] = {
    "md": to_markdown,
    "csv": to_csv,
    "json": to_json,
}


def render(doc: ReportDocument, fmt: str) -> str:
    try:
        renderer = RENDERERS[fmt]
    except KeyError:
        raise ValidationError(f"unknown report format {fmt!r}") from None
    return renderer(doc)


# ---------------------------------------------------------------------------
# runs.json container
# ---------------------------------------------------------------------------


def dump_runs(runs: Sequence[EvalRun], failures: Sequence = ()) -> str:
    payload = {"runs": [run.as_dict() for run in runs]}
    if failures:
        payload["failures"] = [f.as_dict() for f in failures]
    return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


def load_runs(path) -> list[EvalRun]:
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: not valid JSON ({exc.msg})") from exc
    if not isinstance(payload, dict) or "runs" not in payload:
        raise ValidationError(f"{path}: expected an object with a \"runs\" list")
    try:
        return [EvalRun.from_dict(record) for record in payload["runs"]]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"{path}: malformed run record ({exc})") from exc
