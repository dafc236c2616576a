from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ratlog.engine import (
    Budget,
    eval_arith,
    resolve,
    solve_goal,
    solve_query,
    unify,
    walk,
)
from ratlog.errors import PrologError
from ratlog.parser import parse_program, parse_query
from ratlog.terms import Atom, Compound, ListTerm, Number, Var

from .oracles import repeated_multiplication


def q(program_text: str, goal_text: str = "solve(X)", **kwargs):
    return solve_query(parse_program(program_text), parse_query(goal_text), **kwargs)


# ---------------------------------------------------------------------------
# unify
# ---------------------------------------------------------------------------

def test_unify_basic():
    X, Y = Var("X"), Var("Y")
    env = unify(Compound("f", (X, Atom("a"))), Compound("f", (Atom("b"), Y)))
    assert env is not None
    assert walk(X, env) == Atom("b")
    assert walk(Y, env) == Atom("a")


def test_unify_occurs_check():
    X = Var("X")
    assert unify(X, Compound("f", (X,))) is None
    assert unify(X, ListTerm((X,))) is None


def test_unify_tuple_pair():
    env = unify(
        Compound(",", (Var("J"), Var("A"))),
        Compound(",", (Number(3), Number(6))),
    )
    assert env is not None
    assert walk(Var("J"), env) == Number(3)
    assert walk(Var("A"), env) == Number(6)


def test_unify_lists_with_tails():
    env = unify(ListTerm((Number(1),), Var("T")), ListTerm((Number(1), Number(2))))
    assert env is not None
    assert walk(Var("T"), env) == ListTerm((Number(2),))
    env = unify(ListTerm((Number(1),), Var("T")), ListTerm((Number(1),)))
    assert walk(Var("T"), env) == ListTerm()
    assert unify(ListTerm((Number(1),)), ListTerm((Number(2),))) is None
    assert unify(ListTerm(), ListTerm((Number(1),))) is None


def test_unify_does_not_mutate_input_env():
    X = Var("X")
    env = {X: Number(1)}
    out = unify(Var("Y"), Number(2), env)
    assert Var("Y") not in env
    assert out[Var("Y")] == Number(2)


_atoms = st.sampled_from([Atom("a"), Atom("b"), Atom("c")])
_numbers = st.integers(-5, 5).map(Number)
_vars = st.sampled_from([Var("X"), Var("Y"), Var("Z"), Var("W")])
_terms = st.recursive(
    _atoms | _numbers | _vars,
    lambda children: st.builds(
        Compound,
        st.sampled_from(["f", "g"]),
        st.lists(children, min_size=1, max_size=3).map(tuple),
    )
    | st.builds(lambda items: ListTerm(tuple(items)), st.lists(children, max_size=3)),
    max_leaves=12,
)


@given(a=_terms, b=_terms)
@settings(max_examples=300, deadline=None)
def test_unify_produces_a_unifier(a, b):
    env = unify(a, b)
    if env is not None:
        assert resolve(a, env) == resolve(b, env)


# ---------------------------------------------------------------------------
# eval_arith
# ---------------------------------------------------------------------------

def test_eval_arith_power_matches_repeated_multiplication():
    expr = Compound("^", (Number(Fraction(2, 3)), Number(4)))
    assert eval_arith(expr) == repeated_multiplication(Fraction(2, 3), 4)
    assert eval_arith(expr) == Fraction(16, 81)


def test_eval_arith_mod():
    assert eval_arith(Compound("mod", (Number(9), Number(3)))) == 0
    assert eval_arith(Compound("mod", (Number(-7), Number(3)))) == 2  # sign of divisor
    assert eval_arith(Compound("mod", (Number(7), Number(-3)))) == -2


def test_eval_arith_unbound_variable():
    with pytest.raises(PrologError) as excinfo:
        eval_arith(Compound("*", (Var("X"), Number(2))))
    assert excinfo.value.kind == "unbound"


@pytest.mark.parametrize(
    "expr, kind",
    [
        (Compound("/", (Number(1), Number(0))), "zero_divide"),
        (Compound("mod", (Number(1), Number(0))), "zero_divide"),
        (Compound("mod", (Number(Fraction(1, 2)), Number(3))), "type_error"),
        (Compound("^", (Number(2), Number(Fraction(1, 2)))), "type_error"),
        (Compound("^", (Number(2), Number(-1))), "type_error"),
        (Atom("a"), "type_error"),
        (Compound("foo", (Number(1),)), "type_error"),
    ],
)
def test_eval_arith_errors(expr, kind):
    with pytest.raises(PrologError) as excinfo:
        eval_arith(expr)
    assert excinfo.value.kind == kind


@given(
    st.fractions(
        min_value=Fraction(-100), max_value=Fraction(100), max_denominator=50
    ).filter(lambda r: r != 0)
)
@settings(max_examples=200, deadline=None)
def test_eval_arith_exact_inverse(r):
    expr = Compound("*", (Number(r), Number(1 / r)))
    assert eval_arith(expr) == Fraction(1)


# ---------------------------------------------------------------------------
# solve_query and built-ins
# ---------------------------------------------------------------------------

def test_first_solution_in_clause_order():
    result = q("p(1).\np(2).\nsolve(X) :- p(X).")
    assert result.ok
    assert result.answer == Number(1)


def test_unknown_predicate_is_an_error():
    result = q("p(1).", "q(X)")
    assert result.status == "error"
    assert result.error_kind == "unknown_predicate"
    assert "q/1" in result.error_detail


def test_reserved_predicate_cannot_be_redefined():
    result = q("combination(1, 1, 1).\nsolve(X) :- combination(1, 1, X).")
    assert result.status == "error"
    assert result.error_kind == "domain_error"


def test_failure_is_a_value():
    result = q("p(1).\nsolve(X) :- p(X), X > 5.")
    assert result.status == "failure"


def test_between_generates_and_checks():
    result = q("solve(X) :- findall(N, between(2, 5, N), X).")
    assert resolve(result.answer, {}) == ListTerm(tuple(Number(n) for n in range(2, 6)))
    assert q("go.", "between(1, 3, 2)").ok
    result = q("go.", "between(1, 3, 7)")
    assert result.status == "failure"


def test_between_requires_ground_integer_bounds():
    result = q("solve(X) :- between(1, X, 2).")
    assert result.status == "error"
    assert result.error_kind == "type_error"


def test_member_backtracks_in_order():
    result = q("items([3, 1, 2]).\nsolve(X) :- items(L), member(X, L), X < 2.")
    assert result.answer == Number(1)


def test_member_rejects_partial_lists():
    result = q("solve(X) :- member(X, [1 | T]).")
    assert result.status == "error"
    assert result.error_kind == "type_error"


def test_length_both_directions():
    assert q("solve(X) :- length([a, b, c], X).").answer == Number(3)
    result = q("solve(X) :- length(L, 3), length(L, X).")
    assert result.answer == Number(3)
    result = q("solve(X) :- length(L, X).")
    assert result.status == "error"


def test_findall_empty_when_goal_fails():
    result = q("solve(X) :- findall(N, (between(1, 5, N), N > 9), X).")
    assert result.answer == ListTerm()


def test_findall_does_not_bind_outside():
    result = q("solve(X) :- findall(N, between(1, 3, N), _L), X = 99, N = 5.")
    # N stays free after findall, so it can still unify with 5.
    assert result.ok
    assert result.answer == Number(99)


def test_findall_errors_propagate():
    result = q("solve(X) :- findall(N, (between(1, 3, N), M is N + Z), X).")
    assert result.status == "error"
    assert result.error_kind == "unbound"


def test_conjunction_goal_inside_findall():
    result = q(
        "solve(X) :- findall((A, B), (between(1, 2, A), between(1, 2, B)), L), length(L, X)."
    )
    assert result.answer == Number(4)


def test_not_unify():
    assert q("go.", "\\=(1, 2)").ok
    assert q("go.", "\\=(X, 2)").status == "failure"


def test_comparisons_evaluate_both_sides():
    assert q("go.", "=:=(2 + 1, 3)").ok
    assert q("go.", "=\\=(2, 3)").ok
    assert q("go.", "=<(6 / 3, 2)").ok


def test_is_unifies_left():
    result = q("solve(X) :- X is 1 + 2 ^ 3.")
    assert result.answer == Number(9)
    assert q("go.", "is(3, 1 + 2)").ok
    assert q("go.", "is(4, 1 + 2)").status == "failure"


def test_unbound_goal_is_an_error():
    result = q("solve(X) :- X.")
    assert result.status == "error"
    assert result.error_kind == "unbound"


def test_budget_exceeded_on_runaway_program():
    result = q("loop :- loop.\nsolve(X) :- loop.", budget=Budget(max_steps=500))
    assert result.status == "budget_exceeded"
    assert result.steps_used <= 501


def test_budget_monotonicity(golden_records):
    for record in golden_records:
        program = parse_program(record.reference_solution)
        small = solve_query(program, solve_goal(), budget=Budget(max_steps=10_000))
        big = solve_query(program, solve_goal(), budget=Budget(max_steps=1_000_000))
        assert small.ok and big.ok
        assert small.answer == big.answer
        assert small.steps_used == big.steps_used


def test_determinism_including_steps(golden_records):
    for record in golden_records:
        program = parse_program(record.reference_solution)
        first = solve_query(program, solve_goal())
        second = solve_query(program, solve_goal())
        assert first == second


def test_bindings_are_reported_by_name():
    result = q("p(4).\nsolve(X) :- p(X).")
    assert result.bindings == {"X": Number(4)}


def test_atom_facts_resolve():
    result = q("ready.\nsolve(X) :- ready, X = 1.")
    assert result.answer == Number(1)


def test_budget_bounds_must_be_positive():
    with pytest.raises(ValueError):
        Budget(max_steps=0)
    with pytest.raises(ValueError):
        Budget(max_wall=0)
    with pytest.raises(ValueError):
        Budget(max_steps=-5, max_wall=1.0)


def test_deep_recursion_reports_budget():
    # Self-recursive rule with an unreachable base case: depth grows without
    # bound until the step budget cuts it off.
    text = "count(N) :- M is N + 1, count(M).\nsolve(X) :- count(0), X = 1."
    result = q(text, budget=Budget(max_steps=200_000))
    assert result.status == "budget_exceeded"
