import json
import subprocess
import sys
from pathlib import Path

import pytest

from sparqlkit.cli import main

PAPER_QUERY = "select distinct ?ans where { ?ans wdt:P279 wd:Q25356 }"
FLIPPED = "select distinct ?ans where { wd:Q25356 wdt:P279 ?ans }"


def run_cli(*argv) -> int:
    return main(list(argv))


def cli_subprocess(args, stdin_text=""):
    return subprocess.run(
        [sys.executable, "-m", "sparqlkit", *args],
        input=stdin_text,
        capture_output=True,
        text=True,
    )


def test_corrupt_single_line_with_manifest(tmp_path):
    inp = tmp_path / "queries.txt"
    inp.write_text(PAPER_QUERY + "\n")
    out = tmp_path / "pairs.jsonl"
    code = run_cli("corrupt", "--objective", "toc", "--seed", "7", str(inp), "-o", str(out))
    assert code == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 1
    pair = json.loads(lines[0])
    assert pair["objective"] == "toc"
    assert pair["target"] == PAPER_QUERY
    manifest = json.loads((tmp_path / "pairs.jsonl.manifest.json").read_text())
    assert manifest["command"] == "corrupt"
    assert manifest["seed"] == 7
    assert manifest["counts"] == {"processed": 1, "skipped": 0, "emitted": 1}


def test_corrupt_seeded_replay_byte_identical(tmp_path, corpus_path):
    outs = []
    for run in range(2):
        out = tmp_path / f"out{run}.jsonl"
        code = run_cli(
            "corrupt", "--objective", "mixed", "--seed", "7", str(corpus_path), "-o", str(out)
        )
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_corrupt_jobs_matches_serial(tmp_path, corpus_path):
    serial = tmp_path / "serial.jsonl"
    parallel = tmp_path / "parallel.jsonl"
    assert run_cli("corrupt", "--objective", "mixed", "--seed", "7", str(corpus_path), "-o", str(serial)) == 0
    assert run_cli(
        "corrupt", "--objective", "mixed", "--seed", "7", "--jobs", "4", str(corpus_path), "-o", str(parallel)
    ) == 0
    assert serial.read_bytes() == parallel.read_bytes()


def test_corrupt_skips_bad_lines_exit_2(tmp_path):
    inp = tmp_path / "queries.txt"
    inp.write_text(PAPER_QUERY + "\nthis does not parse {\n")
    out = tmp_path / "pairs.jsonl"
    code = run_cli("corrupt", "--objective", "toc", "--seed", "1", str(inp), "-o", str(out))
    assert code == 2
    manifest = json.loads((tmp_path / "pairs.jsonl.manifest.json").read_text())
    assert manifest["counts"]["skipped"] == 1
    assert manifest["counts"]["emitted"] == len(out.read_text().splitlines())


def test_corrupt_stdin_stdout_pipe():
    proc = cli_subprocess(["corrupt", "--objective", "tfc", "--seed", "3"], PAPER_QUERY + "\n")
    assert proc.returncode == 0
    pair = json.loads(proc.stdout.strip())
    assert pair["objective"] == "tfc"
    assert "[manifest]" in proc.stderr


def test_verbalize_and_deverbalize_round_trip(tmp_path, labels_file):
    inp = tmp_path / "in.txt"
    inp.write_text(PAPER_QUERY + "\n")
    mid = tmp_path / "verbalized.txt"
    back = tmp_path / "back.txt"
    assert run_cli("verbalize", "--labels", str(labels_file), str(inp), "-o", str(mid)) == 0
    assert "wdt:subclass_of" in mid.read_text()
    assert run_cli("deverbalize", "--labels", str(labels_file), str(mid), "-o", str(back)) == 0
    assert back.read_text() == inp.read_text()
    manifest = json.loads((tmp_path / "verbalized.txt.manifest.json").read_text())
    assert manifest["counts"]["replaced"] == 2


def test_build_finetune(tmp_path, labels_file):
    data = tmp_path / "data.jsonl"
    record = {
        "id": "e1",
        "question": "What is the subclass of Populus?",
        "query": PAPER_QUERY,
        "entities": [["wd:Q25356", "Populus"]],
        "relations": [["wdt:P279", "subclass of"]],
    }
    data.write_text(json.dumps(record) + "\n")
    out = tmp_path / "ft.jsonl"
    code = run_cli(
        "build-finetune", "--scenario", "gold-both", "--labels", str(labels_file),
        str(data), "-o", str(out),
    )
    assert code == 0
    row = json.loads(out.read_text())
    assert row["id"] == "e1"
    assert row["input"] == (
        "What is the subclass of Populus? | wd:Q25356 Populus | wdt:P279 subclass_of"
    )
    assert row["target"] == "select distinct ?ans where { ?ans wdt:subclass_of wd:Populus }"


def test_build_finetune_gold_entities_scenario(tmp_path):
    data = tmp_path / "data.jsonl"
    record = {
        "id": "e1",
        "question": "q?",
        "query": PAPER_QUERY,
        "entities": [["wd:Q25356", "Populus"]],
        "relations": [["wdt:P279", "subclass of"]],
    }
    data.write_text(json.dumps(record) + "\n")
    out = tmp_path / "ft.jsonl"
    assert run_cli(
        "build-finetune", "--scenario", "gold-entities", "--no-verbalize", str(data), "-o", str(out)
    ) == 0
    row = json.loads(out.read_text())
    assert row["input"].count("|") == 1
    assert "wdt:P279" not in row["input"]
    assert row["target"] == PAPER_QUERY


def test_evaluate_identical_pred_gold(tmp_path):
    records = tmp_path / "records.jsonl"
    rows = [
        {"id": "1", "predicted_query": PAPER_QUERY, "gold_query": PAPER_QUERY},
        {"id": "2", "predicted_query": "ask where { }", "gold_query": "ask where { }"},
    ]
    records.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    out = tmp_path / "results.jsonl"
    report_path = tmp_path / "report.json"
    code = run_cli("evaluate", str(records), "-o", str(out), "--report", str(report_path))
    assert code == 0
    report = json.loads(report_path.read_text())
    assert report["qm_rate"] == 1.0
    assert report["error_counts"]["correct"] == 2


def test_evaluate_with_answers_file(tmp_path):
    records = tmp_path / "records.jsonl"
    records.write_text(
        json.dumps(
            {
                "id": "1",
                "predicted_query": PAPER_QUERY,
                "gold_query": PAPER_QUERY,
                "gold_answers": ["a", "b"],
            }
        )
        + "\n"
    )
    answers = tmp_path / "answers.jsonl"
    answers.write_text(json.dumps({"id": "1", "answers": ["b", "c"]}) + "\n")
    out = tmp_path / "results.jsonl"
    code = run_cli("evaluate", str(records), "-o", str(out), "--answers", str(answers))
    assert code == 0
    row = json.loads(out.read_text())
    assert row["f1"] == 0.5


def test_evaluate_gold_unparsable_fatal(tmp_path):
    records = tmp_path / "records.jsonl"
    records.write_text(
        json.dumps({"id": "1", "predicted_query": PAPER_QUERY, "gold_query": "nope {"}) + "\n"
    )
    assert run_cli("evaluate", str(records)) == 1


def test_classify_errors_flipped_pair(tmp_path):
    records = tmp_path / "records.jsonl"
    records.write_text(
        json.dumps({"id": "1", "predicted_query": FLIPPED, "gold_query": PAPER_QUERY}) + "\n"
    )
    out = tmp_path / "classes.jsonl"
    report_path = tmp_path / "report.json"
    code = run_cli("classify-errors", str(records), "-o", str(out), "--report", str(report_path))
    assert code == 0
    row = json.loads(out.read_text())
    assert row["error_class"] == "triplet-flip"
    report = json.loads(report_path.read_text())
    assert report["error_counts"]["triplet-flip"] == 1
    assert report["triplet_errors"] == 1


def test_parse_check_exit_codes(tmp_path, corpus_path):
    out = tmp_path / "check.jsonl"
    assert run_cli("parse-check", str(corpus_path), "-o", str(out)) == 0
    rows = [json.loads(line) for line in out.read_text().splitlines()]
    assert all(r["ok"] for r in rows)
    bad = tmp_path / "bad.txt"
    bad.write_text("select ?x where { broken\n")
    assert run_cli("parse-check", str(bad), "-o", str(out)) == 2
    row = json.loads(out.read_text().splitlines()[0])
    assert row["ok"] is False and "error" in row


def test_usage_error_exit_1_without_traceback():
    proc = cli_subprocess(["corrupt", "--objective", "bogus"])
    assert proc.returncode == 1
    assert "Traceback" not in proc.stderr
    assert "--objective" in proc.stderr or "bogus" in proc.stderr


def test_missing_labels_file_exit_1():
    proc = cli_subprocess(["verbalize", "--labels", "/nonexistent/labels.tsv"], "x\n")
    assert proc.returncode == 1
    assert "Traceback" not in proc.stderr


def test_fetch_labels_cli(tmp_path, stub_server):
    stub_server.labels = {"wd:Q25356": "Populus"}
    iris = tmp_path / "iris.txt"
    iris.write_text("wd:Q25356\n")
    out = tmp_path / "labels.tsv"
    code = run_cli("fetch-labels", "--endpoint", stub_server.url, str(iris), "-o", str(out))
    assert code == 0
    assert out.read_text() == "wd:Q25356\tPopulus\n"
    manifest = json.loads((tmp_path / "labels.tsv.manifest.json").read_text())
    assert manifest["counts"]["fetched"] == 1


def test_fetch_labels_cli_missing_exit_2(tmp_path, stub_server):
    stub_server.labels = {}
    iris = tmp_path / "iris.txt"
    iris.write_text("wd:Q1\n")
    out = tmp_path / "labels.tsv"
    assert run_cli("fetch-labels", "--endpoint", stub_server.url, str(iris), "-o", str(out)) == 2


def test_evaluate_with_endpoint_and_cache(tmp_path, stub_server):
    records = tmp_path / "records.jsonl"
    records.write_text(
        json.dumps({"id": "1", "predicted_query": PAPER_QUERY, "gold_query": PAPER_QUERY}) + "\n"
    )
    out = tmp_path / "results.jsonl"
    cache = tmp_path / "cache"
    code = run_cli(
        "evaluate", str(records), "-o", str(out),
        "--endpoint", stub_server.url, "--cache-dir", str(cache),
    )
    assert code == 0
    row = json.loads(out.read_text())
    assert row["f1"] == 1.0  # pred and gold execute to the same bindings
    first_requests = len(stub_server.requests)
    assert run_cli(
        "evaluate", str(records), "-o", str(out),
        "--endpoint", stub_server.url, "--cache-dir", str(cache),
    ) == 0
    assert len(stub_server.requests) == first_requests  # cache hit, no re-fetch


def test_config_file_supplies_defaults(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"seed": 9, "objective": "toc"}))
    inp = tmp_path / "in.txt"
    inp.write_text(PAPER_QUERY + "\n")
    out1 = tmp_path / "a.jsonl"
    out2 = tmp_path / "b.jsonl"
    assert run_cli("--config", str(config), "corrupt", str(inp), "-o", str(out1)) == 0
    assert run_cli("corrupt", "--objective", "toc", "--seed", "9", str(inp), "-o", str(out2)) == 0
    assert out1.read_text() == out2.read_text()
