"""Command-line interface.

Subcommands: ``build-dataset`` (template-induced translation pipeline),
``evaluate`` (bias/quality matrix over test sets x providers x views),
``report`` (render runs.json as tables), ``inspect`` (side-by-side top-k for
one query pair), ``rbo`` (standalone metric over two id-list files).

Exit codes: 0 success, 1 usage error, 2 data validation error, 3
provider/backend failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from ._version import __version__
from .builder import build_test_set, load_templates, make_backend, TemplatePair
from .errors import ProviderError, TranslationBackendError, UsageError, ValidationError
from .evaluation import evaluate_matrix, inspect_top_k
from .metrics import DEFAULT_RBO_P, rbo_exponential, rbo_uniform
from .providers import make_provider
from .report import (
    dump_runs,
    load_runs,
    render,
    render_inspection,
    render_map_table,
    render_rbo_table,
)
from .testset import CorpusView, gender_view, load_test_set, summarize, write_test_set

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_BACKEND = 3

_VIEWS = {"m": CorpusView.MASCULINE, "f": CorpusView.FEMININE}


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad args; the toolkit reserves 2 for data errors."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _write_output(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _cmd_build_dataset(args) -> int:
    templates = load_templates(args.templates) if args.templates else TemplatePair()
    backend = make_backend(args.backend, timeout=args.timeout, retries=args.retries)
    partial = args.partial or f"{args.out}.partial.jsonl"
    test_set, report = build_test_set(
        args.source, args.lang, templates, backend, partial_path=partial
    )
    write_test_set(test_set, args.out)
    report_json = json.dumps(report.as_dict(), ensure_ascii=False, indent=2) + "\n"
    if args.report:
        Path(args.report).write_text(report_json, encoding="utf-8")
    else:
        sys.stdout.write(report_json)
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    test_sets = [load_test_set(path) for path in args.testset]
    providers = [make_provider(descriptor, cache_dir=args.cache_dir) for descriptor in args.provider]
    views = list(_VIEWS.values()) if args.view == "both" else [_VIEWS[args.view]]
    result = evaluate_matrix(
        test_sets, providers, views, include_neutral_in_rbo=args.include_neutral_in_rbo
    )
    _write_output(dump_runs(result.runs, result.failures), args.out)
    if result.failures:
        for failure in result.failures:
            print(
                f"FAILED {failure.model_name} / {failure.language} / {failure.corpus_view}: "
                f"{failure.error}",
                file=sys.stderr,
            )
        return EXIT_BACKEND
    return EXIT_OK


def _cmd_report(args) -> int:
    runs = load_runs(args.runs)
    if not runs:
        raise ValidationError(f"{args.runs}: no runs to report")
    if args.view:
        view = _VIEWS[args.view]
    else:
        views = {run.corpus_view for run in runs}
        if len(views) > 1:
            raise UsageError("runs cover both corpus views; choose one with --view m|f")
        view = CorpusView(views.pop())
    timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    if args.metric == "rbo":
        doc = render_rbo_table(runs, view, timestamp=timestamp)
    else:
        doc = render_map_table(runs, view, timestamp=timestamp)
    _write_output(render(doc, args.format), args.out)
    return EXIT_OK


def _cmd_inspect(args) -> int:
    test_set = load_test_set(args.testset)
    provider = make_provider(args.provider, cache_dir=args.cache_dir)
    pairs = {query.id: query for query in test_set.queries}
    if args.query_id not in pairs:
        raise ValidationError(f"query id {args.query_id!r} not in test set")
    view = gender_view(test_set, _VIEWS[args.view])
    table = inspect_top_k(pairs[args.query_id], view, provider, args.k)
    doc = render_inspection(table)
    _write_output(render(doc, args.format), args.out)
    return EXIT_OK


def _read_id_list(path: str) -> list[str]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ValidationError(f"cannot read ranking file {path}: {exc}") from exc
    ids = [line.strip() for line in lines if line.strip()]
    if not ids:
        raise ValidationError(f"{path}: no ids")
    return ids


def _cmd_rbo(args) -> int:
    left = _read_id_list(args.left)
    right = _read_id_list(args.right)
    score = rbo_uniform(left, right)
    payload = {"rbo_uniform": score.value, "depth": score.depth}
    if args.exponential_p is not None:
        payload["rbo_exponential"] = rbo_exponential(left, right, p=args.exponential_p).value
        payload["p"] = args.exponential_p
    print(json.dumps(payload))
    return EXIT_OK


def _cmd_summarize(args) -> int:
    summary = summarize(load_test_set(args.testset))
    print(json.dumps(summary.as_dict(), ensure_ascii=False, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rankfair", description=__doc__)
    parser.add_argument("--version", action="version", version=f"rankfair {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-dataset", help="build a gender-annotated test set via translation")
    p.add_argument("--source", required=True, help="source JSONL of {id, title, relevant}")
    p.add_argument("--lang", required=True, help="target language code (es, de, fr, pt)")
    p.add_argument("--backend", required=True, help="mock:<table.jsonl> or http:<url>")
    p.add_argument("--templates", help="JSON templates/strip-rules file (defaults built in)")
    p.add_argument("--out", required=True, help="output test-set JSONL path")
    p.add_argument("--report", help="write the build report JSON here instead of stdout")
    p.add_argument("--partial", help="partial-progress file on backend failure")
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--retries", type=int, default=2)
    p.set_defaults(func=_cmd_build_dataset)

    p = sub.add_parser("evaluate", help="run the bias/quality evaluation matrix")
    p.add_argument("--testset", action="append", required=True, help="test-set path (repeatable)")
    p.add_argument(
        "--provider",
        action="append",
        required=True,
        help="file:<store>|synthetic:<seed>,<weight>[,<dim>]|http:<url> (repeatable)",
    )
    p.add_argument("--view", choices=["m", "f", "both"], default="both")
    p.add_argument("--include-neutral-in-rbo", action="store_true")
    p.add_argument("--cache-dir", help="embedding cache directory for http providers")
    p.add_argument("--out", help="runs.json path (default stdout)")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("report", help="render runs.json as a table")
    p.add_argument("--runs", required=True)
    p.add_argument("--metric", choices=["rbo", "map"], required=True)
    p.add_argument("--format", choices=["md", "csv", "json"], default="md")
    p.add_argument("--view", choices=["m", "f"])
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("inspect", help="side-by-side top-k for one query pair")
    p.add_argument("--testset", required=True)
    p.add_argument("--provider", required=True)
    p.add_argument("--query-id", required=True)
    p.add_argument("--k", type=int, default=20)
    p.add_argument("--view", choices=["m", "f"], default="m")
    p.add_argument("--format", choices=["md", "csv", "json"], default="md")
    p.add_argument("--cache-dir")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_inspect)

    p = sub.add_parser("rbo", help="uniform RBO between two id-list files")
    p.add_argument("--left", required=True, help="file with one id per line")
    p.add_argument("--right", required=True, help="file with one id per line")
    p.add_argument(
        "--exponential-p",
        type=float,
        nargs="?",
        const=DEFAULT_RBO_P,
        help="also print the exponentially weighted variant "
             f"(default p {DEFAULT_RBO_P} when the flag is bare)",
    )
    p.set_defaults(func=_cmd_rbo)

    p = sub.add_parser("summarize", help="print pair/neutral/total counts for a test set")
    p.add_argument("--testset", required=True)
    p.set_defaults(func=_cmd_summarize)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"rankfair: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"rankfair: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ProviderError, TranslationBackendError) as exc:
        print(f"rankfair: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
