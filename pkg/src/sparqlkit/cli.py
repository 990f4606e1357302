"""Batch command-line front-end.

Subcommands map 1:1 onto pipeline stages: ``corrupt``, ``verbalize``,
``deverbalize``, ``fetch-labels``, ``build-finetune``, ``evaluate``,
``classify-errors``, ``parse-check``. Every stage reads line-oriented input
(``-`` for stdin), writes line-oriented output (``-`` for stdout), and drops
a ``<output>.manifest.json`` beside file outputs. Exit codes: 0 success,
1 fatal configuration/usage error, 2 partial success with skipped records.
"""

from __future__ import annotations

import argparse
import functools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .core import parse, serialize
from .core.errors import SparqlKitError
from .corruption import CorruptionConfig, Objective, corrupt, line_rng
from .corpus import (
    Scenario,
    Schema,
    build_input,
    read_dataset,
)
from .endpoint import (
    CACHE_DIR_ENV,
    EndpointConfig,
    execute_query,
    fetch_labels,
)
from .evaluate import (
    EvalRecord,
    ErrorClass,
    GoldUnparsable,
    MatchMode,
    aggregate_report,
    answer_f1,
    classify_error,
    query_match,
)
from .labels import (
    LabelMap,
    deverbalize_with_stats,
    load_label_map,
    verbalize_with_stats,
)
from .manifest import RunManifest

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2


class UsageError(SparqlKitError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1, not argparse's default 2
        raise UsageError(message)


# --- plumbing ----------------------------------------------------------------


def _read_lines(path: str) -> list[str]:
    fh = sys.stdin if path == "-" else open(path, encoding="utf-8")
    try:
        return [line.rstrip("\n") for line in fh]
    finally:
        if fh is not sys.stdin:
            fh.close()


def _write_lines(path: str, lines: list[str]) -> None:
    fh = sys.stdout if path == "-" else open(path, "w", encoding="utf-8")
    try:
        for line in lines:
            fh.write(line)
            fh.write("\n")
    finally:
        if fh is not sys.stdout:
            fh.close()


def _map_lines(fn, items: list, jobs: int) -> list:
    """Order-preserving map, optionally across processes. Workers never let
    exceptions escape (they return markers), so results are deterministic
    and identical to a serial run."""
    if jobs <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    try:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunk = max(1, len(items) // (jobs * 4))
            return list(pool.map(fn, items, chunksize=chunk))
    except (OSError, PermissionError):
        # restricted sandboxes may not allow worker processes
        return [fn(item) for item in items]


def _config_snapshot(args: argparse.Namespace) -> dict:
    skip = {"func", "config"}
    return {
        k: (v.value if hasattr(v, "value") else v)
        for k, v in sorted(vars(args).items())
        if k not in skip and not callable(v)
    }


def _corruption_config(args: argparse.Namespace) -> CorruptionConfig:
    return CorruptionConfig(
        toc_identity_probability=args.toc_identity_prob,
        mlm_corruption_rate=args.mlm_rate,
        mlm_mean_span_length=args.mlm_mean_span,
        soc_shuffle_fraction=args.soc_fraction,
        tfc_flip_probability=args.tfc_flip_prob,
        rng_seed=args.seed,
    )


def _load_labels_arg(args: argparse.Namespace) -> LabelMap | None:
    if getattr(args, "labels", None):
        return load_label_map(args.labels)
    return None


def _parse_records(lines: list[str], where: str) -> list[dict]:
    records = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{where}:{lineno}: invalid JSON record: {exc}") from exc
        if not isinstance(record, dict):
            raise UsageError(f"{where}:{lineno}: record is not an object")
        records.append(record)
    return records


# --- corrupt -----------------------------------------------------------------


def _corrupt_line(
    item: tuple[int, str],
    objectives: tuple[str, ...],
    seed: int,
    config: CorruptionConfig,
    label_map: LabelMap | None,
    verbalize_iris: bool,
) -> tuple[list[str], bool]:
    """Worker: returns (output lines, skipped)."""
    from .labels import verbalize  # local import keeps the worker light

    index, query = item
    if not query.strip():
        return [], True
    text = query
    if verbalize_iris and label_map is not None:
        try:
            text = verbalize(text, label_map)
        except SparqlKitError:
            return [], True
    out = []
    for name in objectives:
        try:
            pair = corrupt(text, Objective(name), line_rng(seed, index, name), config)
        except SparqlKitError:
            return [], True
        out.append(
            json.dumps(
                {"objective": pair.objective.value, "input": pair.input, "target": pair.target},
                ensure_ascii=False,
            )
        )
    return out, False


def cmd_corrupt(args: argparse.Namespace) -> int:
    if not args.objective:
        raise UsageError("corrupt requires --objective (toc|mlm|tfc|soc|mixed)")
    manifest = RunManifest.start("corrupt", _config_snapshot(args), args.seed, [args.input])
    config = _corruption_config(args)
    label_map = _load_labels_arg(args)
    objectives = ("toc", "mlm") if args.objective == "mixed" else (args.objective,)
    lines = _read_lines(args.input)
    worker = functools.partial(
        _corrupt_line,
        objectives=objectives,
        seed=args.seed,
        config=config,
        label_map=label_map,
        verbalize_iris=args.verbalize,
    )
    results = _map_lines(worker, list(enumerate(lines)), args.jobs)
    out_lines = [line for chunk, _ in results for line in chunk]
    skipped = sum(1 for _, s in results if s)
    _write_lines(args.output, out_lines)
    manifest.finish(
        [args.output],
        {"processed": len(lines), "skipped": skipped, "emitted": len(out_lines)},
    )
    manifest.write_beside(args.output)
    if skipped:
        print(f"[corrupt] skipped {skipped} line(s) that did not parse", file=sys.stderr)
    return EXIT_PARTIAL if skipped else EXIT_OK


# --- verbalize / deverbalize ---------------------------------------------------


def _substitute_line(
    item: tuple[int, str], label_map: LabelMap, direction: str
) -> tuple[str, dict, bool]:
    index, line = item
    if not line.strip():
        return line, {}, False
    fn = verbalize_with_stats if direction == "verbalize" else deverbalize_with_stats
    try:
        text, stats = fn(line, label_map)
    except SparqlKitError:
        return line, {}, True
    return (
        text,
        {
            "replaced": stats.replaced,
            "unknown": stats.unknown,
            "unresolved": stats.unresolved,
            "collisions": stats.collisions,
        },
        False,
    )


def _cmd_substitute(args: argparse.Namespace, direction: str) -> int:
    manifest = RunManifest.start(direction, _config_snapshot(args), None, [args.input])
    label_map = load_label_map(args.labels)
    lines = _read_lines(args.input)
    worker = functools.partial(_substitute_line, label_map=label_map, direction=direction)
    results = _map_lines(worker, list(enumerate(lines)), args.jobs)
    out_lines = [text for text, _, _ in results]
    totals: dict[str, int] = {"replaced": 0, "unknown": 0, "unresolved": 0, "collisions": 0}
    skipped = 0
    for _, stats, skip in results:
        skipped += int(skip)
        for key, value in stats.items():
            totals[key] += value
    _write_lines(args.output, out_lines)
    counts = {"processed": len(lines), "skipped": skipped, **totals,
              "map_collisions": len(label_map.collisions)}
    manifest.finish([args.output], counts)
    manifest.write_beside(args.output)
    return EXIT_PARTIAL if skipped else EXIT_OK


def cmd_verbalize(args: argparse.Namespace) -> int:
    return _cmd_substitute(args, "verbalize")


def cmd_deverbalize(args: argparse.Namespace) -> int:
    return _cmd_substitute(args, "deverbalize")


# --- fetch-labels --------------------------------------------------------------


def cmd_fetch_labels(args: argparse.Namespace) -> int:
    manifest = RunManifest.start("fetch-labels", _config_snapshot(args), None, [args.input])
    iris = [
        line.strip()
        for line in _read_lines(args.input)
        if line.strip() and not line.lstrip().startswith("#")
    ]
    config = EndpointConfig(
        timeout=args.timeout,
        max_retries=args.retries,
        backoff=args.backoff,
        min_interval=(1.0 / args.rate) if args.rate else 0.0,
    )
    result = fetch_labels(
        iris, args.endpoint, args.lang, batch_size=args.batch_size, config=config
    )
    out_lines = [f"{iri}\t{label}" for iri, label in result.entries]
    _write_lines(args.output, out_lines)
    manifest.finish(
        [args.output],
        {
            "requested": len(iris),
            "fetched": len(result.entries),
            "missing": len(result.missing),
            "requests": result.requests_made,
        },
    )
    manifest.write_beside(args.output)
    for iri in result.missing:
        print(f"[fetch-labels] no label for {iri}", file=sys.stderr)
    return EXIT_PARTIAL if result.missing else EXIT_OK


# --- build-finetune -------------------------------------------------------------


def cmd_build_finetune(args: argparse.Namespace) -> int:
    manifest = RunManifest.start("build-finetune", _config_snapshot(args), None, [args.input])
    label_map = _load_labels_arg(args)
    scenario = Scenario(args.scenario)
    result = read_dataset(args.input, Schema(args.schema))
    out_lines = []
    for example in result.examples:
        target = serialize(parse(example.gold_query))
        if args.verbalize and label_map is not None:
            from .labels import verbalize

            target = verbalize(target, label_map)
        out_lines.append(
            json.dumps(
                {"id": example.id, "input": build_input(example, scenario), "target": target},
                ensure_ascii=False,
            )
        )
    _write_lines(args.output, out_lines)
    manifest.finish(
        [args.output],
        {
            "processed": len(result.examples) + result.skipped,
            "emitted": len(out_lines),
            "skipped_missing_query": result.skipped_missing_query,
            "skipped_unparsable": result.skipped_unparsable,
        },
    )
    manifest.write_beside(args.output)
    return EXIT_PARTIAL if result.skipped else EXIT_OK


# --- evaluate / classify-errors ---------------------------------------------------


def _classify_record(record: dict) -> tuple[str, str]:
    rid = str(record.get("id", ""))
    try:
        cls = classify_error(record.get("predicted_query", ""), record.get("gold_query", ""))
    except GoldUnparsable:
        return rid, "__gold_unparsable__"
    return rid, cls.value


def _print_report(report, stream=sys.stderr) -> None:
    print("=" * 46, file=stream)
    print(f"{'examples':<28}{report.n:>10}", file=stream)
    print(f"{'query match rate':<28}{report.qm_rate:>10.4f}", file=stream)
    if report.f1_evaluated:
        print(
            f"{'macro F1 (n=' + str(report.f1_evaluated) + ')':<28}{report.macro_f1:>10.4f}",
            file=stream,
        )
    for name, count in report.error_counts.items():
        print(f"{'  ' + name:<28}{count:>10}", file=stream)
    print(f"{'  triplet errors (total)':<28}{report.triplet_errors:>10}", file=stream)
    if report.empty:
        print("warning: empty input, rates are undefined (reported as 0)", file=stream)
    print("=" * 46, file=stream)


def _report_json(report) -> dict:
    return {
        "n": report.n,
        "qm_rate": report.qm_rate,
        "macro_f1": report.macro_f1,
        "f1_evaluated": report.f1_evaluated,
        "error_counts": report.error_counts,
        "triplet_errors": report.triplet_errors,
        "empty": report.empty,
    }


def _answers_from_field(value):
    if isinstance(value, bool):
        return value
    if value is None:
        return None
    return frozenset(str(v) for v in value)


def cmd_classify_errors(args: argparse.Namespace) -> int:
    manifest = RunManifest.start("classify-errors", _config_snapshot(args), None, [args.input])
    records = _parse_records(_read_lines(args.input), args.input)
    results = _map_lines(_classify_record, records, args.jobs)
    out_lines = []
    eval_records = []
    for record, (rid, value) in zip(records, results):
        if value == "__gold_unparsable__":
            raise UsageError(f"gold query for record {rid!r} does not parse")
        out_lines.append(json.dumps({"id": rid, "error_class": value}, ensure_ascii=False))
        cls = ErrorClass(value)
        eval_records.append(
            EvalRecord(id=rid, error_class=cls, qm=cls is ErrorClass.CORRECT)
        )
    report = aggregate_report(eval_records)
    _write_lines(args.output, out_lines)
    counts = {"processed": len(records), **report.error_counts}
    manifest.finish([args.output], counts)
    manifest.write_beside(args.output)
    _print_report(report)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(_report_json(report), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    manifest = RunManifest.start("evaluate", _config_snapshot(args), None, [args.input])
    mode = MatchMode(args.mode)
    records = _parse_records(_read_lines(args.input), args.input)
    predicted_answers: dict[str, object] = {}
    if args.answers:
        for record in _parse_records(_read_lines(args.answers), args.answers):
            predicted_answers[str(record.get("id", ""))] = _answers_from_field(
                record.get("answers")
            )
    cache_dir = args.cache_dir or os.environ.get(CACHE_DIR_ENV)
    endpoint_config = EndpointConfig(timeout=args.timeout, max_retries=args.retries)
    eval_records = []
    out_lines = []
    execution_errors = 0
    for record in records:
        rid = str(record.get("id", ""))
        pred = record.get("predicted_query", "")
        gold = record.get("gold_query", "")
        qm = query_match(pred, gold, mode)  # GoldUnparsable propagates: fatal
        cls = classify_error(pred, gold)
        gold_answers = _answers_from_field(record.get("gold_answers"))
        pred_answers = None
        exec_error = None
        if args.endpoint:
            try:
                pred_answers = execute_query(
                    pred,
                    args.endpoint,
                    cache_dir=cache_dir,
                    config=endpoint_config,
                )
            except SparqlKitError as exc:
                pred_answers = frozenset()
                exec_error = str(exc)
                execution_errors += 1
            if gold_answers is None:
                gold_answers = execute_query(
                    gold, args.endpoint, cache_dir=cache_dir, config=endpoint_config
                )
        elif rid in predicted_answers:
            pred_answers = predicted_answers[rid]
        precision = recall = f1 = None
        if pred_answers is not None and gold_answers is not None:
            precision, recall, f1 = answer_f1(
                pred_answers, gold_answers, both_empty_score=args.both_empty_score
            )
        eval_records.append(
            EvalRecord(
                id=rid,
                error_class=cls,
                qm=qm,
                precision=precision,
                recall=recall,
                f1=f1,
                execution_error=exec_error,
            )
        )
        out = {"id": rid, "qm": qm, "error_class": cls.value}
        if f1 is not None:
            out.update({"precision": precision, "recall": recall, "f1": f1})
        if exec_error:
            out["execution_error"] = exec_error
        out_lines.append(json.dumps(out, ensure_ascii=False))
    report = aggregate_report(eval_records)
    _write_lines(args.output, out_lines)
    counts = {
        "processed": len(records),
        "execution_errors": execution_errors,
        **report.error_counts,
    }
    manifest.finish([args.output], counts)
    manifest.write_beside(args.output)
    _print_report(report)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(_report_json(report), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_PARTIAL if execution_errors else EXIT_OK


# --- parse-check ---------------------------------------------------------------


def _parse_check_line(item: tuple[int, str]) -> tuple[int, bool, str | None]:
    lineno, line = item
    if not line.strip():
        return lineno, True, None
    try:
        parse(line)
    except SparqlKitError as exc:
        return lineno, False, f"{type(exc).__name__}: {exc}"
    return lineno, True, None


def cmd_parse_check(args: argparse.Namespace) -> int:
    manifest = RunManifest.start("parse-check", _config_snapshot(args), None, [args.input])
    lines = _read_lines(args.input)
    results = _map_lines(_parse_check_line, list(enumerate(lines, 1)), args.jobs)
    out_lines = []
    failures = 0
    for lineno, ok, error in results:
        record: dict = {"line": lineno, "ok": ok}
        if error:
            record["error"] = error
            failures += 1
        out_lines.append(json.dumps(record, ensure_ascii=False))
    _write_lines(args.output, out_lines)
    manifest.finish([args.output], {"processed": len(lines), "failed": failures})
    manifest.write_beside(args.output)
    if failures:
        print(f"[parse-check] {failures} line(s) failed to parse", file=sys.stderr)
    return EXIT_PARTIAL if failures else EXIT_OK


# --- argument wiring -------------------------------------------------------------


def _add_io(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("input", nargs="?", default="-", help="input file ('-' = stdin)")
    sub.add_argument("-o", "--output", default="-", help="output file ('-' = stdout)")
    sub.add_argument("--jobs", type=int, default=1, help="per-line parallelism")


def build_parser() -> _Parser:
    parser = _Parser(prog="sparqlkit", description=__doc__)
    parser.add_argument("--config", help="JSON file with default flag values")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("corrupt", help="emit pretraining corruption pairs")
    _add_io(p)
    # not argparse-required so a --config file can supply it
    p.add_argument("--objective", choices=["toc", "mlm", "tfc", "soc", "mixed"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--toc-identity-prob", type=float, default=1.0 / 6.0)
    p.add_argument("--mlm-rate", type=float, default=0.15)
    p.add_argument("--mlm-mean-span", type=float, default=3.0)
    p.add_argument("--soc-fraction", type=float, default=0.15)
    p.add_argument("--tfc-flip-prob", type=float, default=0.5)
    p.add_argument("--labels", help="label TSV; verbalize queries before corruption")
    p.add_argument("--verbalize", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_corrupt)

    p = subs.add_parser("verbalize", help="replace IRIs with labels")
    _add_io(p)
    p.add_argument("--labels", required=True)
    p.set_defaults(func=cmd_verbalize)

    p = subs.add_parser("deverbalize", help="map labels back to IRIs")
    _add_io(p)
    p.add_argument("--labels", required=True)
    p.set_defaults(func=cmd_deverbalize)

    p = subs.add_parser("fetch-labels", help="fetch rdfs:label values over HTTP")
    _add_io(p)
    p.add_argument("--endpoint", required=True)
    p.add_argument("--lang", default="en")
    p.add_argument("--rate", type=float, default=0.0, help="max requests per second")
    p.add_argument("--batch-size", type=int, default=50)
    p.add_argument("--retries", type=int, default=3)
    p.add_argument("--backoff", type=float, default=0.5)
    p.add_argument("--timeout", type=float, default=30.0)
    p.set_defaults(func=cmd_fetch_labels)

    p = subs.add_parser("build-finetune", help="emit fine-tuning input/target pairs")
    _add_io(p)
    p.add_argument("--scenario", default="gold-both", choices=[s.value for s in Scenario])
    p.add_argument("--schema", default="generic", choices=[s.value for s in Schema])
    p.add_argument("--labels")
    p.add_argument("--verbalize", action=argparse.BooleanOptionalAction, default=True)
    p.set_defaults(func=cmd_build_finetune)

    p = subs.add_parser("evaluate", help="score predictions against gold")
    _add_io(p)
    p.add_argument("--mode", default="ast", choices=[m.value for m in MatchMode])
    p.add_argument("--endpoint", help="execute queries against this endpoint")
    p.add_argument("--answers", help="JSONL of predicted answers keyed by id")
    p.add_argument("--report", help="write machine-readable report JSON here")
    p.add_argument("--cache-dir", help=f"result cache (default ${CACHE_DIR_ENV})")
    p.add_argument("--both-empty-score", type=float, default=1.0)
    p.add_argument("--retries", type=int, default=3)
    p.add_argument("--timeout", type=float, default=60.0)
    p.set_defaults(func=cmd_evaluate)

    p = subs.add_parser("classify-errors", help="triplet-level error taxonomy")
    _add_io(p)
    p.add_argument("--report", help="write machine-readable report JSON here")
    p.set_defaults(func=cmd_classify_errors)

    p = subs.add_parser("parse-check", help="report per-line parse status")
    _add_io(p)
    p.set_defaults(func=cmd_parse_check)

    return parser


def _apply_config_file(parser: _Parser, argv: list[str]) -> None:
    if "--config" not in argv:
        return
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise UsageError("--config requires a path")
    with open(argv[idx + 1], encoding="utf-8") as fh:
        defaults = json.load(fh)
    if not isinstance(defaults, dict):
        raise UsageError("--config file must hold a JSON object")
    for sub_action in parser._subparsers._group_actions:  # type: ignore[union-attr]
        for sub in sub_action.choices.values():  # type: ignore[union-attr]
            known = {a.dest for a in sub._actions}
            sub.set_defaults(**{k: v for k, v in defaults.items() if k in known})


def run(argv: list[str]) -> int:
    parser = build_parser()
    _apply_config_file(parser, argv)
    args = parser.parse_args(argv)
    return args.func(args)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        return run(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except SparqlKitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
