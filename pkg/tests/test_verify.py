from __future__ import annotations

from fractions import Fraction

import pytest

from ratlog.corpus import ProblemRecord
from ratlog.engine import Budget, DEFAULT_MAX_STEPS
from ratlog.verify import (
    AccuracyReport,
    EmptyFold,
    Verdict,
    VerdictKind,
    accuracy,
    candidate_budget,
    verdict_log_line,
    verify_candidate,
)

from .oracles import smith_family_arrangements, word_position_bab


def test_reference_verifies_against_itself(golden_records):
    for record in golden_records:
        verdict = verify_candidate(record.reference_solution, record)
        assert verdict.kind is VerdictKind.ACCEPT, record.id
        assert verdict.candidate_answer == record.reference_answer


def test_unvalidated_reference_is_rejected():
    record = ProblemRecord("r", "q", "solve(X) :- X is 1.")
    with pytest.raises(ValueError):
        verify_candidate("solve(X) :- X is 1.", record)


def test_dice_candidate_is_runtime_error_unbound(a5_records, candidate_text):
    verdict = verify_candidate(candidate_text("dice_unbound.pl"), a5_records["a5-dice"])
    assert verdict.kind is VerdictKind.RUNTIME_ERROR
    assert "unbound" in verdict.detail


def test_word_position_candidate_is_wrong_answer(a5_records, candidate_text):
    record = a5_records["a5-word-position"]
    assert record.reference_answer == word_position_bab() == 11
    verdict = verify_candidate(candidate_text("word_position_miscount.pl"), record)
    assert verdict.kind is VerdictKind.WRONG_ANSWER
    assert verdict.candidate_answer == 28


def test_seated_children_candidate_is_wrong_answer(a5_records, candidate_text):
    record = a5_records["a5-seated-children"]
    assert record.reference_answer == smith_family_arrangements() == 720
    verdict = verify_candidate(candidate_text("seated_children_overcount.pl"), record)
    assert verdict.kind is VerdictKind.WRONG_ANSWER
    assert verdict.candidate_answer == 5040 * 6 * 24


def test_parse_error_verdict(golden_records):
    verdict = verify_candidate("solve(X :- oops.", golden_records[0])
    assert verdict.kind is VerdictKind.PARSE_ERROR
    assert "line" in verdict.detail


def test_no_solution_maps_to_runtime_error(golden_records):
    verdict = verify_candidate("p(9).\nsolve(X) :- p(X), X < 2.", golden_records[0])
    assert verdict.kind is VerdictKind.RUNTIME_ERROR
    assert "no_solution" in verdict.detail


def test_budget_exceeded_verdict(golden_records):
    verdict = verify_candidate(
        "loop :- loop.\nsolve(X) :- loop.",
        golden_records[0],
        budget=Budget(max_steps=200),
    )
    assert verdict.kind is VerdictKind.BUDGET_EXCEEDED


def test_non_numeric_answer_is_wrong_answer(golden_records):
    verdict = verify_candidate("solve(X) :- X = hello.", golden_records[0])
    assert verdict.kind is VerdictKind.WRONG_ANSWER
    assert verdict.candidate_answer is None


def test_candidate_budget_is_halved():
    budget = candidate_budget()
    assert budget.max_steps == DEFAULT_MAX_STEPS // 2


def test_accept_requires_exact_equality(golden_by_id):
    record = golden_by_id["golden-octahedral-dice"]  # reference answer 1/2
    near = "solve(X) :- X is 333/666."
    verdict = verify_candidate(near, record)
    assert verdict.kind is VerdictKind.ACCEPT  # 333/666 reduces to exactly 1/2
    off = "solve(X) :- X is 333/1000."
    assert verify_candidate(off, record).kind is VerdictKind.WRONG_ANSWER


def test_verification_is_reproducible(golden_records, candidate_text):
    record = golden_records[0]
    first = verify_candidate(record.reference_solution, record)
    second = verify_candidate(record.reference_solution, record)
    assert first == second


def test_answer_comparison_is_symmetric(golden_records):
    # Swapping which side is "candidate" cannot change acceptance.
    for record in golden_records:
        verdict = verify_candidate(record.reference_solution, record)
        assert (verdict.candidate_answer == verdict.reference_answer) == (
            verdict.reference_answer == verdict.candidate_answer
        )
        assert verdict.accepted == (verdict.candidate_answer == verdict.reference_answer)


# ---------------------------------------------------------------------------
# accuracy
# ---------------------------------------------------------------------------

def _verdict(kind):
    return Verdict(kind, Fraction(1))


def test_accuracy_all_accept():
    verdicts = {0: [_verdict(VerdictKind.ACCEPT)] * 3}
    assert accuracy(verdicts).overall == 1


def test_accuracy_none_accept():
    verdicts = {0: [_verdict(VerdictKind.WRONG_ANSWER)] * 3}
    assert accuracy(verdicts).overall == 0


def test_accuracy_five_folds_of_one():
    verdicts = {
        f: [_verdict(VerdictKind.ACCEPT if f < 4 else VerdictKind.PARSE_ERROR)]
        for f in range(5)
    }
    report = accuracy(verdicts)
    assert report.overall == Fraction(4, 5)
    assert report.per_fold == ((0, 1, 1), (1, 1, 1), (2, 1, 1), (3, 1, 1), (4, 0, 1))


def test_accuracy_rejects_empty_fold():
    with pytest.raises(EmptyFold):
        accuracy({0: [_verdict(VerdictKind.ACCEPT)], 1: []})


def test_accuracy_monotonicity():
    base = {0: [_verdict(VerdictKind.ACCEPT), _verdict(VerdictKind.WRONG_ANSWER)]}
    before = accuracy(base).overall
    more_accept = {0: base[0] + [_verdict(VerdictKind.ACCEPT)]}
    more_reject = {0: base[0] + [_verdict(VerdictKind.RUNTIME_ERROR)]}
    assert accuracy(more_accept).overall >= before
    assert accuracy(more_reject).overall <= before


def test_accuracy_report_text():
    report = AccuracyReport(per_fold=((0, 1, 2),), overall=Fraction(1, 2))
    text = report.to_text()
    assert "fold 0: 1/2" in text
    assert "overall: 1/2" in text


def test_verdict_log_line():
    verdict = Verdict(
        VerdictKind.ACCEPT, Fraction(2, 5), candidate_answer=Fraction(2, 5), steps_used=137
    )
    assert verdict_log_line("golden-pair-sum-product", verdict) == (
        "golden-pair-sum-product\taccept\t2/5\t137"
    )
    failed = Verdict(VerdictKind.PARSE_ERROR, Fraction(1), detail="x")
    assert verdict_log_line("q", failed) == "q\tparse_error\t-\t0"
