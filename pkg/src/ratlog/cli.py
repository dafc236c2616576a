"""Command-line entry point.

Subcommands: run, verify, folds, selftrain, crossval, graph.  Exit codes:
0 success, 1 verification failures or a program that does not produce an
answer, 2 usage or I/O errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .corpus import DEFAULT_MAX_CHARS, BadK, SchemaError, load_corpus_report, split_folds, validate_corpus
from .engine import Budget, DEFAULT_MAX_STEPS, DEFAULT_MAX_WALL, solve_query
from .errors import ManifestError, ParseError
from .graph import GraphError, export_dot, extract_graph
from .operators import default_registry, load_manifest
from .parser import parse_program, parse_query
from .prompts import MODE_WITH_PREDICATES, PROMPT_MODES
from .selftrain import (
    LocalRewriteGenerator,
    RemoteGenerator,
    SelfTrainConfig,
    run_cross_validation,
    run_self_training,
)
from .terms import render_term
from .verify import verdict_log_line


def _common_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--seed", type=int, default=0, help="seed for all shuffling")
    parser.add_argument("--budget-steps", type=int, default=DEFAULT_MAX_STEPS,
                        help="resolution step limit per query")
    parser.add_argument("--budget-secs", type=float, default=DEFAULT_MAX_WALL,
                        help="wall-clock limit per query, seconds")
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="verification fan-out; 1 is the deterministic reference mode")
    parser.add_argument("--out", type=Path, default=None, help="directory for reports")
    parser.add_argument("--operators-manifest", type=Path, default=None,
                        help="extra operator declarations to load at startup")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ratlog", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a program's solve/1 and print the answer")
    p_run.add_argument("file", type=Path)
    p_run.add_argument("--goal", default="solve(X)")
    _common_flags(p_run)

    p_verify = sub.add_parser("verify", help="validate every corpus record by execution")
    p_verify.add_argument("corpus", type=Path)
    p_verify.add_argument("--max-chars", type=int, default=DEFAULT_MAX_CHARS)
    _common_flags(p_verify)

    p_folds = sub.add_parser("folds", help="emit a deterministic fold assignment")
    p_folds.add_argument("corpus", type=Path)
    p_folds.add_argument("--k", type=int, default=5)
    p_folds.add_argument("--max-chars", type=int, default=DEFAULT_MAX_CHARS)
    _common_flags(p_folds)

    p_st = sub.add_parser("selftrain", help="self-train on one fold of a corpus")
    p_st.add_argument("corpus", type=Path)
    p_st.add_argument("--fold", type=int, required=True, help="fold index used as generation set")
    p_st.add_argument("--k", type=int, default=5)
    p_st.add_argument("--epochs", type=int, default=10)
    p_st.add_argument("--max-solutions", type=int, default=2)
    p_st.add_argument("--samples", type=int, default=1)
    p_st.add_argument("--generator", choices=("rewrite", "remote"), default="rewrite")
    p_st.add_argument("--prompt-mode", choices=PROMPT_MODES, default=MODE_WITH_PREDICATES)
    p_st.add_argument("--endpoint", default=None, help="remote generator URL (or env)")
    p_st.add_argument("--model", default="default")
    p_st.add_argument("--max-chars", type=int, default=DEFAULT_MAX_CHARS)
    p_st.add_argument("--resume", action="store_true", help="continue from an existing journal")
    _common_flags(p_st)

    p_cv = sub.add_parser("crossval", help="k-fold cross-validated self-training")
    p_cv.add_argument("corpus", type=Path)
    p_cv.add_argument("--k", type=int, default=5)
    p_cv.add_argument("--epochs", type=int, default=10)
    p_cv.add_argument("--max-solutions", type=int, default=2)
    p_cv.add_argument("--samples", type=int, default=1)
    p_cv.add_argument("--generator", choices=("rewrite", "remote"), default="rewrite")
    p_cv.add_argument("--prompt-mode", choices=PROMPT_MODES, default=MODE_WITH_PREDICATES)
    p_cv.add_argument("--endpoint", default=None)
    p_cv.add_argument("--model", default="default")
    p_cv.add_argument("--max-chars", type=int, default=DEFAULT_MAX_CHARS)
    _common_flags(p_cv)

    p_graph = sub.add_parser("graph", help="emit the dataflow graph of a program in DOT form")
    p_graph.add_argument("file", type=Path)
    _common_flags(p_graph)

    return parser


def _write_manifest(args: argparse.Namespace):
    """Reproducibility header: the resolved invocation, written before any work."""
    if args.out is None:
        return
    args.out.mkdir(parents=True, exist_ok=True)
    flags = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in vars(args).items()
        if k != "command"
    }
    manifest = {
        "subcommand": args.command,
        "flags": flags,
        "seed": args.seed,
        "corpus": str(getattr(args, "corpus", getattr(args, "file", ""))),
        "out": str(args.out),
    }
    (args.out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _registry(args: argparse.Namespace):
    registry = default_registry()
    if args.operators_manifest is not None:
        load_manifest(args.operators_manifest, registry)
    return registry


def _budget(args: argparse.Namespace) -> Budget:
    return Budget(max_steps=args.budget_steps, max_wall=args.budget_secs)


def _load_validated(args: argparse.Namespace, budget: Budget):
    records, summary = load_corpus_report(args.corpus, max_chars=args.max_chars)
    validated, issues = validate_corpus(records, budget=budget, jobs=args.jobs)
    summary.mismatch = sum(1 for i in issues if i.kind == "mismatch")
    summary.loaded = len(validated)
    for issue in issues:
        summary.skipped.append((issue.record_id, f"{issue.kind}: {issue.detail}"))
    return validated, summary, issues


def _make_generator(args: argparse.Namespace, budget: Budget, registry):
    if args.generator == "remote":
        return RemoteGenerator(endpoint=args.endpoint, model=args.model)
    return LocalRewriteGenerator(budget=budget, registry=registry)


def _selftrain_config(args: argparse.Namespace, budget: Budget) -> SelfTrainConfig:
    return SelfTrainConfig(
        epochs=args.epochs,
        max_solutions=args.max_solutions,
        samples_per_question=args.samples,
        seed=args.seed,
        budget=budget,
        prompt_mode=args.prompt_mode,
    )


# -- subcommand bodies -------------------------------------------------------

def _cmd_run(args) -> int:
    registry = _registry(args)
    try:
        program = parse_program(args.file.read_text(encoding="utf-8"))
        goal = parse_query(args.goal)
    except ParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return 1
    result = solve_query(program, goal, budget=_budget(args), registry=registry)
    if result.ok:
        print(render_term(result.answer))
        return 0
    if result.status == "failure":
        print("no solution", file=sys.stderr)
    elif result.status == "budget_exceeded":
        print(f"budget exceeded: {result.error_detail}", file=sys.stderr)
    else:
        print(f"error: {result.error_kind}: {result.error_detail}", file=sys.stderr)
    return 1


def _cmd_verify(args) -> int:
    validated, summary, issues = _load_validated(args, _budget(args))
    text = summary.to_text()
    print(text, end="")
    if args.out is not None:
        (args.out / "summary.txt").write_text(text, encoding="utf-8")
    failures = summary.parse_failed + len(issues)
    return 1 if failures else 0


def _cmd_folds(args) -> int:
    records, _ = load_corpus_report(args.corpus, max_chars=args.max_chars)
    plan = split_folds(records, args.k, args.seed)
    payload = {"seed": plan.seed, "k": plan.k, "assignment": plan.assignment}
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    print(text, end="")
    if args.out is not None:
        (args.out / "folds.json").write_text(text, encoding="utf-8")
    return 0


def _cmd_selftrain(args) -> int:
    budget = _budget(args)
    registry = _registry(args)
    validated, summary, _ = _load_validated(args, budget)
    plan = split_folds(validated, args.k, args.seed)
    if not 0 <= args.fold < args.k:
        print(f"--fold must be in 0..{args.k - 1}", file=sys.stderr)
        return 2
    folds = plan.folds(validated)
    generation = folds[args.fold]
    train = [r for r in validated if plan.assignment[r.id] != args.fold]
    config = _selftrain_config(args, budget)
    generator = _make_generator(args, budget, registry)
    journal_path = None
    if args.out is not None:
        journal_path = args.out / f"journal_fold{args.fold}.jsonl"
    result = run_self_training(
        config, train, generation, generator,
        journal_path=journal_path, resume=args.resume, jobs=args.jobs,
    )
    print(f"discovered {len(result.discovered)} solutions over {len(result.metrics)} epochs")
    for m in result.metrics:
        print(
            f"epoch {m['epoch']}: generation_remaining={m['generation_remaining']} "
            f"discovered_total={m['discovered_total']} accept={m.get('accept', 0)}"
        )
    if args.out is not None:
        lines = [
            verdict_log_line(qid, verdict)
            for qid, verdict in sorted(result.state.last_verdict.items())
        ]
        (args.out / "verdicts.log").write_text("\n".join(lines) + "\n", encoding="utf-8")
        (args.out / "metrics.jsonl").write_text(
            "".join(json.dumps(m, sort_keys=True) + "\n" for m in result.metrics),
            encoding="utf-8",
        )
    return 0


def _cmd_crossval(args) -> int:
    budget = _budget(args)
    registry = _registry(args)
    validated, summary, _ = _load_validated(args, budget)
    plan = split_folds(validated, args.k, args.seed)
    config = _selftrain_config(args, budget)
    generator = _make_generator(args, budget, registry)
    result = run_cross_validation(
        config, validated, plan, generator, journal_dir=args.out, jobs=args.jobs
    )
    text = result.report.to_text()
    print(text, end="")
    if args.out is not None:
        (args.out / "accuracy.txt").write_text(text, encoding="utf-8")
    return 0


def _cmd_graph(args) -> int:
    try:
        program = parse_program(args.file.read_text(encoding="utf-8"))
        graph = extract_graph(program, registry=_registry(args))
    except (ParseError, GraphError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    dot = export_dot(graph)
    print(dot, end="")
    for warning in graph.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if args.out is not None:
        (args.out / "graph.dot").write_text(dot, encoding="utf-8")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "verify": _cmd_verify,
    "folds": _cmd_folds,
    "selftrain": _cmd_selftrain,
    "crossval": _cmd_crossval,
    "graph": _cmd_graph,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _write_manifest(args)
        return _COMMANDS[args.command](args)
    except (OSError, SchemaError, BadK, ManifestError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
