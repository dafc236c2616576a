"""Problem-set ingestion: read, size-filter, validate by execution, fold-split.

Corpus files are UTF-8 with one JSON object per line; reserved keys are
``id``, ``category``, ``question``, ``solution``, and optional ``answer``.
A record survives loading when its solution parses and its rendered training
example (prompt plus solution) fits the size bound; it survives validation
when executing the solution yields the stored answer (or any answer, if none
was stored).
"""
from __future__ import annotations

import dataclasses
import json
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .engine import Budget, solve_goal, solve_query
from .errors import KIND_NO_SOLUTION, ParseError, PrologError, BudgetExceededError
from .parser import parse_program
from .prompts import render_prompt_text
from .terms import Number

DEFAULT_MAX_CHARS = 10_800  # rendered prompt + solution size bound


class SchemaError(Exception):
    """A corpus line that is not a well-formed record; fatal."""


class BadK(ValueError):
    """Fold count incompatible with the corpus size."""


class AnswerMismatch(Exception):
    def __init__(self, record_id: str, stored: Fraction, computed: Fraction):
        self.record_id = record_id
        self.stored = stored
        self.computed = computed
        super().__init__(f"record {record_id}: stored answer {stored} but computed {computed}")


@dataclass(frozen=True)
class ProblemRecord:
    id: str
    question: str
    reference_solution: str
    reference_answer: Fraction | None = None
    category: str = ""


@dataclass
class LoadSummary:
    loaded: int = 0
    oversize: int = 0
    parse_failed: int = 0
    mismatch: int = 0
    skipped: list = field(default_factory=list)  # (record id or line, reason)

    def to_text(self) -> str:
        lines = [
            f"loaded={self.loaded}",
            f"oversize={self.oversize}",
            f"parse_failed={self.parse_failed}",
            f"mismatch={self.mismatch}",
        ]
        for ident, reason in self.skipped:
            lines.append(f"skip\t{ident}\t{reason}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FoldPlan:
    seed: int
    k: int
    assignment: dict  # record id -> fold index

    def fold_ids(self, fold: int) -> list:
        return [rid for rid, f in self.assignment.items() if f == fold]

    def folds(self, records: list) -> list:
        """Group records by fold, keeping the input order inside each fold."""
        out = [[] for _ in range(self.k)]
        for record in records:
            out[self.assignment[record.id]].append(record)
        return out


def _parse_answer(raw, lineno: int) -> Fraction:
    try:
        if isinstance(raw, int) and not isinstance(raw, bool):
            return Fraction(raw)
        if isinstance(raw, str):
            return Fraction(raw)
    except (ValueError, ZeroDivisionError):
        pass
    raise SchemaError(f"line {lineno}: answer must be an integer or a 'p/q' string, got {raw!r}")


def read_records(path) -> list[ProblemRecord]:
    """Parse every line into a record; any malformed line is fatal."""
    records = []
    seen_ids = set()
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise SchemaError(f"line {lineno}: not valid JSON ({e.msg})") from None
        if not isinstance(obj, dict):
            raise SchemaError(f"line {lineno}: record must be a JSON object")
        for key in ("id", "question", "solution"):
            if not isinstance(obj.get(key), str) or not obj[key]:
                raise SchemaError(f"line {lineno}: missing or empty field {key!r}")
        if obj["id"] in seen_ids:
            raise SchemaError(f"line {lineno}: duplicate record id {obj['id']!r}")
        seen_ids.add(obj["id"])
        answer = None
        if obj.get("answer") is not None:
            answer = _parse_answer(obj["answer"], lineno)
        records.append(
            ProblemRecord(
                id=obj["id"],
                question=obj["question"],
                reference_solution=obj["solution"],
                reference_answer=answer,
                category=str(obj.get("category", "")),
            )
        )
    return records


def load_corpus_report(path, max_chars: int = DEFAULT_MAX_CHARS) -> tuple[list, LoadSummary]:
    """Load records, dropping oversize entries and unparsable solutions.

    Dropped records are reported in the summary, not raised: one bad record
    must not sink a corpus.
    """
    summary = LoadSummary()
    kept = []
    for record in read_records(path):
        rendered = render_prompt_text(record.question, "with_predicates") + record.reference_solution
        if len(rendered) > max_chars:
            summary.oversize += 1
            summary.skipped.append((record.id, f"oversize ({len(rendered)} > {max_chars} chars)"))
            continue
        try:
            parse_program(record.reference_solution)
        except ParseError as e:
            summary.parse_failed += 1
            summary.skipped.append((record.id, f"parse_error: {e}"))
            continue
        kept.append(record)
    summary.loaded = len(kept)
    return kept, summary


def load_corpus(path, max_chars: int = DEFAULT_MAX_CHARS) -> list:
    records, _ = load_corpus_report(path, max_chars)
    return records


def compute_reference_answer(record: ProblemRecord, budget: Budget | None = None) -> Fraction:
    """Execute the reference solution; equality with any stored answer is
    asserted.  Engine errors propagate as exceptions."""
    program = parse_program(record.reference_solution)
    result = solve_query(program, solve_goal(), budget=budget)
    if result.status == "budget_exceeded":
        raise BudgetExceededError(result.error_detail or "budget exceeded")
    if result.status == "error":
        raise PrologError(result.error_kind, result.error_detail or "")
    if result.status == "failure":
        raise PrologError(KIND_NO_SOLUTION, "solve/1 has no solution")
    if not isinstance(result.answer, Number):
        raise PrologError("type_error", "solve/1 answer is not a number")
    computed = result.answer.value
    if record.reference_answer is not None and record.reference_answer != computed:
        raise AnswerMismatch(record.id, record.reference_answer, computed)
    return computed


@dataclass(frozen=True)
class ValidationIssue:
    record_id: str
    kind: str  # "mismatch" | "parse_error" | error kind | "budget_exceeded"
    detail: str


def validate_corpus(
    records: list, budget: Budget | None = None, jobs: int = 1
) -> tuple[list, list]:
    """Execute every reference solution.  Returns (validated, issues) where
    validated records carry their computed answers; aggregation follows the
    input order regardless of ``jobs``."""

    def check(record: ProblemRecord):
        try:
            answer = compute_reference_answer(record, budget=budget)
            return dataclasses.replace(record, reference_answer=answer), None
        except AnswerMismatch as e:
            return None, ValidationIssue(record.id, "mismatch", str(e))
        except ParseError as e:
            return None, ValidationIssue(record.id, "parse_error", str(e))
        except BudgetExceededError as e:
            return None, ValidationIssue(record.id, "budget_exceeded", str(e))
        except PrologError as e:
            return None, ValidationIssue(record.id, e.kind, e.message)

    if jobs > 1 and len(records) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(check, records))
    else:
        outcomes = [check(r) for r in records]

    validated = [rec for rec, _ in outcomes if rec is not None]
    issues = [issue for _, issue in outcomes if issue is not None]
    return validated, issues


def split_folds(records: list, k: int, seed: int) -> FoldPlan:
    """Seeded shuffle then round-robin assignment; same seed, same plan."""
    if k < 2:
        raise BadK(f"need at least 2 folds, got {k}")
    if len(records) < k:
        raise BadK(f"cannot split {len(records)} records into {k} folds")
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        raise BadK("record ids must be unique")
    shuffled = list(ids)
    random.Random(seed).shuffle(shuffled)
    assignment = {rid: i % k for i, rid in enumerate(shuffled)}
    return FoldPlan(seed=seed, k=k, assignment=assignment)
