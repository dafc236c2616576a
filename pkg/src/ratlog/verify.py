"""Execution-based verification of candidate solutions and the accuracy metric.

A candidate is accepted exactly when it parses, runs to success within its
budget, and its answer equals the reference answer as an exact rational.
Everything else maps to a non-accept verdict kind; verification never raises
on a bad candidate.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .corpus import ProblemRecord
from .engine import Budget, DEFAULT_MAX_STEPS, DEFAULT_MAX_WALL, solve_goal, solve_query
from .errors import ParseError
from .parser import parse_program
from .terms import Number


class VerdictKind(str, enum.Enum):
    ACCEPT = "accept"
    WRONG_ANSWER = "wrong_answer"
    PARSE_ERROR = "parse_error"
    RUNTIME_ERROR = "runtime_error"
    BUDGET_EXCEEDED = "budget_exceeded"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    reference_answer: Fraction | None
    candidate_answer: Fraction | None = None
    steps_used: int = 0
    detail: str = ""

    @property
    def accepted(self) -> bool:
        return self.kind is VerdictKind.ACCEPT


class EmptyFold(ValueError):
    pass


@dataclass(frozen=True)
class AccuracyReport:
    per_fold: tuple  # (fold index, correct, total)
    overall: Fraction

    def to_text(self) -> str:
        lines = [f"fold {i}: {c}/{t}" for i, c, t in self.per_fold]
        lines.append(f"overall: {self.overall} ({float(self.overall):.4f})")
        return "\n".join(lines) + "\n"


def candidate_budget() -> Budget:
    """Default budget for untrusted candidates: half the engine default."""
    return Budget(max_steps=DEFAULT_MAX_STEPS // 2, max_wall=DEFAULT_MAX_WALL / 2)


def verify_candidate(
    candidate_text: str,
    reference: ProblemRecord,
    budget: Budget | None = None,
    registry=None,
) -> Verdict:
    """Parse, execute, and compare a candidate against a validated reference."""
    if reference.reference_answer is None:
        raise ValueError(f"reference record {reference.id} has no validated answer")
    ref_answer = reference.reference_answer
    budget = budget or candidate_budget()

    try:
        program = parse_program(candidate_text)
    except ParseError as e:
        return Verdict(VerdictKind.PARSE_ERROR, ref_answer, detail=str(e))

    result = solve_query(program, solve_goal(), budget=budget, registry=registry)
    if result.status == "budget_exceeded":
        return Verdict(
            VerdictKind.BUDGET_EXCEEDED,
            ref_answer,
            steps_used=result.steps_used,
            detail=result.error_detail or "",
        )
    if result.status == "error":
        return Verdict(
            VerdictKind.RUNTIME_ERROR,
            ref_answer,
            steps_used=result.steps_used,
            detail=f"{result.error_kind}: {result.error_detail}",
        )
    if result.status == "failure":
        return Verdict(
            VerdictKind.RUNTIME_ERROR,
            ref_answer,
            steps_used=result.steps_used,
            detail="no_solution: solve/1 has no solution",
        )
    if not isinstance(result.answer, Number):
        return Verdict(
            VerdictKind.WRONG_ANSWER,
            ref_answer,
            steps_used=result.steps_used,
            detail="solve/1 answer is not a number",
        )
    value = result.answer.value
    kind = VerdictKind.ACCEPT if value == ref_answer else VerdictKind.WRONG_ANSWER
    return Verdict(kind, ref_answer, candidate_answer=value, steps_used=result.steps_used)


def accuracy(verdicts_by_fold: Mapping[int, list]) -> AccuracyReport:
    """Accept coverage: accepted verdicts over all verdicts, fold by fold."""
    per_fold = []
    correct_total = 0
    grand_total = 0
    for fold in sorted(verdicts_by_fold):
        verdicts = verdicts_by_fold[fold]
        if not verdicts:
            raise EmptyFold(f"fold {fold} has no verdicts")
        correct = sum(1 for v in verdicts if v.accepted)
        per_fold.append((fold, correct, len(verdicts)))
        correct_total += correct
        grand_total += len(verdicts)
    return AccuracyReport(per_fold=tuple(per_fold), overall=Fraction(correct_total, grand_total))


def verdict_log_line(record_id: str, verdict: Verdict) -> str:
    """``id<TAB>kind<TAB>answer<TAB>steps`` for line-oriented verdict logs."""
    if verdict.candidate_answer is None:
        answer = "-"
    else:
        answer = str(verdict.candidate_answer)
    return f"{record_id}\t{verdict.kind.value}\t{answer}\t{verdict.steps_used}"
