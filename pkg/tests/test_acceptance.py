"""Acceptance gate: every release-blocking behavior, one test per criterion.

Each test prints a single PASS/FAIL line (visible with ``pytest -v -s`` or in
the captured output on failure) so the gate can be read at a glance.
"""
from __future__ import annotations

import contextlib
import random
import time
from fractions import Fraction


from ratlog.corpus import split_folds
from ratlog.engine import solve_goal, solve_query
from ratlog.operators import apply_operator, prompt_block
from ratlog.parser import parse_program, parse_query
from ratlog.prompts import (
    MODE_WITH_PREDICATES,
    MODE_WITHOUT_PREDICATES,
)
from ratlog.selftrain import (
    LocalRewriteGenerator,
    SelfTrainConfig,
    audit_journal,
    read_journal,
    render_prompt,
    run_cross_validation,
)
from ratlog.terms import Number
from ratlog.verify import VerdictKind, verify_candidate

from . import oracles


@contextlib.contextmanager
def criterion(number: int, title: str):
    try:
        yield
    except BaseException:
        print(f"FAIL  criterion {number}: {title}")
        raise
    print(f"PASS  criterion {number}: {title}")


# ---------------------------------------------------------------------------
# 1. Golden execution
# ---------------------------------------------------------------------------

def test_criterion_1_golden_execution_suite(golden_by_id):
    expected = {
        "golden-pair-sum-product": oracles.pair_sum_gt_product_probability(),
        "golden-chocolate-milk": oracles.chocolate_milk_probability(),
        "golden-octahedral-dice": oracles.dice_product_multiple_of_three(),
        "golden-comic-books": Fraction(oracles.comic_book_orders()),
        "golden-binomial-sum": Fraction(oracles.binomial_identity_sum()),
    }
    # The oracles themselves pin the stated values.
    assert expected["golden-pair-sum-product"] == Fraction(2, 5)
    assert expected["golden-chocolate-milk"] == Fraction(80, 243)
    assert expected["golden-octahedral-dice"] == Fraction(1, 2)
    assert expected["golden-comic-books"] == 12441600
    assert expected["golden-binomial-sum"] == 26

    with criterion(1, "golden programs evaluate exactly, fast, within step bounds"):
        for rid, value in expected.items():
            program = parse_program(golden_by_id[rid].reference_solution)
            started = time.perf_counter()
            result = solve_query(program, solve_goal())
            elapsed = time.perf_counter() - started
            assert result.ok, rid
            assert result.answer == Number(value), rid
            assert elapsed < 1.0, (rid, elapsed)
            assert result.steps_used < 10**6, (rid, result.steps_used)


# ---------------------------------------------------------------------------
# 2. Operator identities
# ---------------------------------------------------------------------------

def test_criterion_2_operator_identity_suite():
    with criterion(2, "Pascal + decomposition identities (496 cases), involution x1000"):
        decomposition_cases = 0
        for n in range(0, 31):
            for k in range(0, n + 1):
                comb = apply_operator("combination", [Fraction(n), Fraction(k)])
                perm = apply_operator("permutation", [Fraction(n), Fraction(k)])
                fact = apply_operator("factorial", [Fraction(k)])
                assert comb == perm / fact, (n, k)
                decomposition_cases += 1
                if 1 <= k <= n - 1:
                    left = apply_operator("combination", [Fraction(n - 1), Fraction(k - 1)])
                    right = apply_operator("combination", [Fraction(n - 1), Fraction(k)])
                    assert comb == left + right, (n, k)
        assert decomposition_cases == 496

        rng = random.Random(2024)
        for _ in range(1000):
            p = Fraction(rng.randint(-1000, 1000), rng.randint(1, 1000))
            once = apply_operator("probability_complement", [p])
            assert apply_operator("probability_complement", [once]) == p


# ---------------------------------------------------------------------------
# 3. findall against loop enumeration
# ---------------------------------------------------------------------------

def _random_constraints(rng: random.Random):
    """A (goal text, python predicate) pair over a bound variable X."""
    kind = rng.choice(["mod", "lt", "ge", "palindrome", "square"])
    if kind == "mod":
        m = rng.randint(2, 7)
        r = rng.randint(0, m - 1)
        return f"X mod {m} =:= {r}", lambda x: x % m == r
    if kind == "lt":
        c = rng.randint(1, 50)
        return f"X < {c}", lambda x: x < c
    if kind == "ge":
        c = rng.randint(1, 50)
        return f"X >= {c}", lambda x: x >= c
    if kind == "palindrome":
        return "palindrome(X)", lambda x: str(x) == str(x)[::-1]
    c = rng.randint(1, 2500)
    return f"X * X =< {c}", lambda x: x * x <= c


def test_criterion_3_findall_oracle_suite():
    with criterion(3, "findall equals loop enumeration on 200 random bounded goals"):
        rng = random.Random(7)
        empty = parse_program("")
        sizes = [10, 25, 100, 400, 1000]
        for case in range(200):
            n = 10_000 if case < 2 else rng.choice(sizes)  # bound of 10^4 exercised
            goal_text, predicate = _random_constraints(rng)
            query = parse_query(f"findall(X, (between(1, {n}, X), {goal_text}), L)")
            result = solve_query(empty, query)
            assert result.ok, (case, goal_text)
            engine_list = [t.value for t in result.bindings["L"].items]
            oracle_list = [x for x in range(1, n + 1) if predicate(x)]
            assert engine_list == oracle_list, (case, n, goal_text)


# ---------------------------------------------------------------------------
# 4. Error taxonomy
# ---------------------------------------------------------------------------

def test_criterion_4_error_taxonomy_suite(a5_records, candidate_text):
    with criterion(4, "all three flawed candidates map to the specified non-accept kinds"):
        dice = verify_candidate(candidate_text("dice_unbound.pl"), a5_records["a5-dice"])
        assert dice.kind is VerdictKind.RUNTIME_ERROR
        assert "unbound" in dice.detail

        words = verify_candidate(
            candidate_text("word_position_miscount.pl"), a5_records["a5-word-position"]
        )
        assert words.kind in (VerdictKind.WRONG_ANSWER, VerdictKind.RUNTIME_ERROR)
        assert words.kind is not VerdictKind.ACCEPT

        seats = verify_candidate(
            candidate_text("seated_children_overcount.pl"), a5_records["a5-seated-children"]
        )
        assert seats.kind in (VerdictKind.WRONG_ANSWER, VerdictKind.RUNTIME_ERROR)
        assert seats.kind is not VerdictKind.ACCEPT


# ---------------------------------------------------------------------------
# 5. Closed-loop self-training
# ---------------------------------------------------------------------------

def test_criterion_5_closed_loop_self_training(mini_records, tmp_path):
    with criterion(5, "closed loop: coverage, audit, caps, determinism, under 60s"):
        config = SelfTrainConfig(epochs=10, max_solutions=2, seed=13)
        plan = split_folds(mini_records, 5, seed=13)
        by_id = {r.id: r for r in mini_records}

        started = time.perf_counter()
        first_dir = tmp_path / "run1"
        result = run_cross_validation(
            config, mini_records, plan, LocalRewriteGenerator(), journal_dir=first_dir
        )
        elapsed = time.perf_counter() - started
        assert elapsed < 60.0, elapsed

        # Every question's reference is rewritable, so every question leaves
        # its generation set with exactly max_solutions discoveries.
        for fold_result in result.fold_results:
            assert fold_result.state.generation == []
            assert all(count <= 2 for count in fold_result.state.counts.values())
            assert all(count == 2 for count in fold_result.state.counts.values())

        # Journal replay: every kept solution re-verifies as accepted.
        for fold in range(5):
            journal = first_dir / f"journal_fold{fold}.jsonl"
            assert read_journal(journal)[-1]["event"] == "run_end"
            assert audit_journal(journal, by_id) == []

        # Same seed, same bytes.
        second_dir = tmp_path / "run2"
        run_cross_validation(
            config, mini_records, plan, LocalRewriteGenerator(), journal_dir=second_dir
        )
        for fold in range(5):
            name = f"journal_fold{fold}.jsonl"
            assert (first_dir / name).read_bytes() == (second_dir / name).read_bytes()


# ---------------------------------------------------------------------------
# 6. Cross-validation harness
# ---------------------------------------------------------------------------

class _GarbageGenerator:
    def on_epoch(self, train_pairs):
        pass

    def sample(self, record, prompt):
        return "solve(X :- nonsense"


def test_criterion_6_cross_validation_harness(mini_records):
    with criterion(6, "crossval reports exactly 1 with the rewrite generator, 0 with garbage"):
        plan = split_folds(mini_records, 5, seed=3)
        good = run_cross_validation(
            SelfTrainConfig(epochs=5, max_solutions=1, seed=3),
            mini_records, plan, LocalRewriteGenerator(),
        )
        assert good.report.overall == Fraction(1)
        total = sum(t for _, _, t in good.report.per_fold)
        correct = sum(c for _, c, t in good.report.per_fold)
        assert (correct, total) == (len(mini_records), len(mini_records))

        bad = run_cross_validation(
            SelfTrainConfig(epochs=1, max_solutions=1, seed=3),
            mini_records, plan, _GarbageGenerator(),
        )
        assert bad.report.overall == Fraction(0)
        for fold_result in bad.fold_results:
            assert all(
                v.kind is VerdictKind.PARSE_ERROR
                for v in fold_result.state.last_verdict.values()
            )


# ---------------------------------------------------------------------------
# 7. Prompt fidelity
# ---------------------------------------------------------------------------

def test_criterion_7_prompt_fidelity(fixtures_dir, mini_records):
    with criterion(7, "prompts byte-match fixtures; operator block iff with_predicates"):
        question = "How many positive two-digit integers are palindromes?"
        from ratlog.corpus import ProblemRecord

        record = ProblemRecord("probe", question, "solve(X) :- X is 9.", Fraction(9))

        rendered = render_prompt(record, MODE_WITHOUT_PREDICATES)
        fixture = (fixtures_dir / "prompts" / "without_predicates.txt").read_text(encoding="utf-8")
        assert rendered == fixture

        rendered_ops = render_prompt(record, MODE_WITH_PREDICATES)
        fixture_ops = (fixtures_dir / "prompts" / "with_predicates.txt").read_text(encoding="utf-8")
        assert rendered_ops == fixture_ops

        block = prompt_block()
        assert block in rendered_ops
        assert block not in rendered

        for record in mini_records[:3]:
            assert prompt_block() in render_prompt(record, MODE_WITH_PREDICATES)
            assert prompt_block() not in render_prompt(record, MODE_WITHOUT_PREDICATES)
