from __future__ import annotations

import json

import pytest

from ratlog.cli import main

GOLDEN = "tests/fixtures/golden.jsonl"
MINI = "tests/fixtures/mini.jsonl"


def test_run_prints_answer(capsys, golden_by_id, tmp_path):
    source = golden_by_id["golden-pair-sum-product"].reference_solution
    path = tmp_path / "pairs.pl"
    path.write_text(source, encoding="utf-8")
    code = main(["run", str(path)])
    assert code == 0
    assert capsys.readouterr().out.strip() == "2/5"


def test_run_custom_goal(capsys, tmp_path):
    path = tmp_path / "p.pl"
    path.write_text("p(7).\n", encoding="utf-8")
    assert main(["run", str(path), "--goal", "p(X)"]) == 0
    assert capsys.readouterr().out.strip() == "7"


def test_run_reports_failures(capsys, tmp_path):
    path = tmp_path / "p.pl"
    path.write_text("solve(X) :- unknown_op(X).\n", encoding="utf-8")
    assert main(["run", str(path)]) == 1
    assert "unknown_predicate" in capsys.readouterr().err


def test_run_missing_file_is_usage_error(capsys):
    assert main(["run", "no_such_file.pl"]) == 2


def test_verify_clean_corpus(capsys):
    assert main(["verify", GOLDEN]) == 0
    out = capsys.readouterr().out
    assert "loaded=5" in out
    assert "mismatch=0" in out


def test_verify_tampered_corpus(capsys, tmp_path):
    lines = open(GOLDEN).read().splitlines()
    record = json.loads(lines[0])
    record["answer"] = "1/3"
    tampered = tmp_path / "tampered.jsonl"
    tampered.write_text("\n".join([json.dumps(record)] + lines[1:]) + "\n", encoding="utf-8")
    out_dir = tmp_path / "out"
    assert main(["verify", str(tampered), "--out", str(out_dir)]) == 1
    out = capsys.readouterr().out
    assert "mismatch=1" in out
    assert "mismatch=1" in (out_dir / "summary.txt").read_text()


def test_manifest_written_before_work(tmp_path):
    out_dir = tmp_path / "out"
    main(["verify", GOLDEN, "--out", str(out_dir), "--seed", "9"])
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["subcommand"] == "verify"
    assert manifest["seed"] == 9
    assert manifest["corpus"].endswith("golden.jsonl")


def test_folds_deterministic_output(capsys, tmp_path):
    assert main(["folds", MINI, "--k", "5", "--seed", "3"]) == 0
    first = capsys.readouterr().out
    assert main(["folds", MINI, "--k", "5", "--seed", "3"]) == 0
    assert capsys.readouterr().out == first
    plan = json.loads(first)
    assert plan["k"] == 5
    assert len(plan["assignment"]) == 20


def test_folds_bad_k_is_usage_error(capsys):
    assert main(["folds", MINI, "--k", "1"]) == 2


def test_graph_dot_output(capsys, tmp_path, golden_by_id):
    path = tmp_path / "robert.pl"
    path.write_text(golden_by_id["golden-chocolate-milk"].reference_solution, encoding="utf-8")
    assert main(["graph", str(path)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("digraph computation {")
    assert "combination#0" in out


def test_graph_without_solve_rule(capsys, tmp_path):
    path = tmp_path / "facts.pl"
    path.write_text("p(1).\n", encoding="utf-8")
    assert main(["graph", str(path)]) == 1
    assert "solve" in capsys.readouterr().err


def test_selftrain_single_fold(capsys, tmp_path):
    out_dir = tmp_path / "st"
    code = main([
        "selftrain", MINI, "--fold", "0", "--k", "5", "--epochs", "4",
        "--max-solutions", "1", "--seed", "3", "--out", str(out_dir), "--jobs", "1",
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "discovered 4 solutions" in out
    assert (out_dir / "journal_fold0.jsonl").exists()
    assert (out_dir / "verdicts.log").read_text().count("accept") == 4
    metrics = [json.loads(l) for l in (out_dir / "metrics.jsonl").read_text().splitlines()]
    assert metrics[-1]["generation_remaining"] == 0


def test_crossval_full_coverage(capsys, tmp_path):
    out_dir = tmp_path / "cv"
    code = main([
        "crossval", MINI, "--k", "5", "--epochs", "4", "--max-solutions", "1",
        "--seed", "3", "--generator", "rewrite", "--out", str(out_dir), "--jobs", "1",
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "overall: 1 (1.0000)" in out
    assert (out_dir / "accuracy.txt").read_text() == out[out.index("fold 0"):]


def test_operators_manifest_flag(capsys, tmp_path):
    path = tmp_path / "p.pl"
    path.write_text("solve(X) :- is_even(4), X = 1.\n", encoding="utf-8")
    code = main(["run", str(path), "--operators-manifest", "tests/fixtures/extra_ops.manifest"])
    # Declared but unbound semantics: runtime error, not unknown predicate.
    assert code == 1
    assert "no_semantics" in capsys.readouterr().err


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as excinfo:
        main(["selftrain", MINI])  # --fold is required
    assert excinfo.value.code == 2
