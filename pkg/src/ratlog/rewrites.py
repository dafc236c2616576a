"""Answer-preserving rewrite rules over solution programs.

Each rule replaces one operator goal by an equivalent composition, e.g. a
choose-k goal by ordered-arrangements / factorial / division.  Variant
generation is deterministic (rule-major, then clause/goal position) and every
variant is validated by execution before it is returned: a rewrite that does
not reproduce the original answer is dropped, not trusted.
"""
from __future__ import annotations

from .engine import Budget, solve_goal, solve_query
from .terms import (
    Clause,
    Compound,
    ListTerm,
    Number,
    Program,
    Term,
    Var,
    canonicalize,
    clause_vars,
    render_program,
)

_MAX_UNROLL_EXPONENT = 8


class _FreshNamer:
    """Allocates RW0, RW1, ... skipping names already used in the clause."""

    def __init__(self, clause: Clause):
        self._used = {v.name for v in clause_vars(clause)}
        self._n = 0

    def __call__(self) -> Var:
        while True:
            name = f"RW{self._n}"
            self._n += 1
            if name not in self._used:
                self._used.add(name)
                return Var(name)


def _rw_combination(goal: Term, fresh: _FreshNamer):
    """combination(N, K, C)  =>  permutation(N, K, P), factorial(K, F),
    division_principle(P, F, C)."""
    if not (isinstance(goal, Compound) and goal.functor == "combination" and len(goal.args) == 3):
        return None
    n, k, out = goal.args
    p, f = fresh(), fresh()
    return [
        Compound("permutation", (n, k, p)),
        Compound("factorial", (k, f)),
        Compound("division_principle", (p, f, out)),
    ]


def _rw_pair_product(goal: Term, fresh: _FreshNamer):
    """multiplication_principle([A, B], Out)  =>  Out is A * B."""
    if not (
        isinstance(goal, Compound)
        and goal.functor == "multiplication_principle"
        and len(goal.args) == 2
    ):
        return None
    lst, out = goal.args
    if not (isinstance(lst, ListTerm) and lst.tail is None and len(lst.items) == 2):
        return None
    a, b = lst.items
    return [Compound("is", (out, Compound("*", (a, b))))]


def _rw_power_unroll(goal: Term, fresh: _FreshNamer):
    """power(B, e, Out) with a small literal exponent  =>
    multiplication_principle([B, ..., B], Out)."""
    if not (isinstance(goal, Compound) and goal.functor == "power" and len(goal.args) == 3):
        return None
    base, exponent, out = goal.args
    if not isinstance(exponent, Number):
        return None
    e = exponent.value
    if e.denominator != 1 or e < 0 or e > _MAX_UNROLL_EXPONENT:
        return None
    return [Compound("multiplication_principle", (ListTerm((base,) * int(e)), out))]


REWRITE_RULES = [
    ("combination_decomposition", _rw_combination),
    ("pair_product_inline", _rw_pair_product),
    ("power_unroll", _rw_power_unroll),
]


def rewrite_variants(
    program: Program,
    max_variants: int,
    budget: Budget | None = None,
    registry=None,
) -> list[Program]:
    """Produce up to ``max_variants`` programs that evaluate to the same
    answer as ``program`` but are canonically distinct from it (and from each
    other).  Returns [] when no rule applies or the base program does not run.
    """
    if max_variants <= 0:
        return []
    base = solve_query(program, solve_goal(), budget=budget, registry=registry)
    if not base.ok or not isinstance(base.answer, Number):
        return []
    seen = {canonicalize(program).source_text}
    variants: list[Program] = []

    for _rule_name, rule_fn in REWRITE_RULES:
        for ci, clause in enumerate(program.clauses):
            if clause.is_fact:
                continue
            for gi, goal in enumerate(clause.body):
                if len(variants) >= max_variants:
                    return variants
                replacement = rule_fn(goal, _FreshNamer(clause))
                if replacement is None:
                    continue
                new_body = clause.body[:gi] + tuple(replacement) + clause.body[gi + 1:]
                new_clauses = list(program.clauses)
                new_clauses[ci] = Clause(clause.head, new_body)
                candidate = Program(tuple(new_clauses))
                candidate = Program(candidate.clauses, source_text=render_program(candidate))
                canonical = canonicalize(candidate).source_text
                if canonical in seen:
                    continue
                result = solve_query(candidate, solve_goal(), budget=budget, registry=registry)
                if not result.ok or result.answer != base.answer:
                    continue
                seen.add(canonical)
                variants.append(candidate)
    return variants
