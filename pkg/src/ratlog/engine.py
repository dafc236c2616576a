"""Execution layer: unification, depth-first resolution, built-ins, budgets.

The engine resolves goals depth-first, left to right, in clause order, which
makes every query deterministic: the same program, goal, and budget always
produce the same result and the same step count.  Failure is a value
(``status == "failure"``); runtime errors and exhausted budgets are reported
through the QueryResult status rather than leaking exceptions to callers.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .errors import (
    BudgetExceededError,
    KIND_DOMAIN,
    KIND_TYPE,
    KIND_UNBOUND,
    KIND_UNKNOWN_PREDICATE,
    KIND_ZERO_DIVIDE,
    PrologError,
)
from .terms import (
    Atom,
    Clause,
    Compound,
    ListTerm,
    Number,
    Program,
    Term,
    Var,
    indicator,
    iter_vars,
    map_vars,
    render_term,
)

DEFAULT_MAX_STEPS = 10_000_000
DEFAULT_MAX_WALL = 10.0

_WALL_CHECK_MASK = 0x3FF  # check the clock every 1024 steps
_MAX_DEPTH = 1_000_000  # choice-point stack bound; caps memory on runaway recursion


@dataclass(frozen=True)
class Budget:
    """Resource limits for one query; both bounds must be positive."""

    max_steps: int = DEFAULT_MAX_STEPS
    max_wall: float = DEFAULT_MAX_WALL

    def __post_init__(self):
        if self.max_steps <= 0 or self.max_wall <= 0:
            raise ValueError("budget limits must be strictly positive")


@dataclass(frozen=True)
class QueryResult:
    status: str  # "success" | "failure" | "error" | "budget_exceeded"
    steps_used: int
    answer: Term | None = None
    bindings: dict = field(default_factory=dict)
    error_kind: str | None = None
    error_detail: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "success"


Bindings = dict  # Var -> Term, triangular: values may contain further bound vars


def walk(t: Term, env: Bindings) -> Term:
    """Follow variable bindings until a non-variable or an unbound var."""
    while isinstance(t, Var):
        bound = env.get(t)
        if bound is None:
            return t
        t = bound
    return t


def resolve(t: Term, env: Bindings) -> Term:
    """Substitute bindings all the way down (the reified term)."""
    t = walk(t, env)
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(resolve(a, env) for a in t.args))
    if isinstance(t, ListTerm):
        items = tuple(resolve(a, env) for a in t.items)
        tail = resolve(t.tail, env) if t.tail is not None else None
        return ListTerm(items, tail)
    return t


def occurs(v: Var, t: Term, env: Bindings) -> bool:
    t = walk(t, env)
    if t == v:
        return True
    if isinstance(t, Compound):
        return any(occurs(v, a, env) for a in t.args)
    if isinstance(t, ListTerm):
        if any(occurs(v, a, env) for a in t.items):
            return True
        return t.tail is not None and occurs(v, t.tail, env)
    return False


def unify(a: Term, b: Term, env: Bindings | None = None) -> Bindings | None:
    """Most general unifier extending ``env``; None when the terms clash.

    The occurs check is on: a variable never unifies with a term containing
    it, so substitutions stay acyclic.  The input mapping is never mutated.
    """
    out = dict(env) if env else {}
    if _unify_into(a, b, out):
        return out
    return None


def _unify_into(a: Term, b: Term, env: Bindings) -> bool:
    a = walk(a, env)
    b = walk(b, env)
    if a == b:
        return True
    if isinstance(a, Var):
        if occurs(a, b, env):
            return False
        env[a] = b
        return True
    if isinstance(b, Var):
        if occurs(b, a, env):
            return False
        env[b] = a
        return True
    if isinstance(a, Number) and isinstance(b, Number):
        return a.value == b.value
    if isinstance(a, Atom) and isinstance(b, Atom):
        return a.name == b.name
    if isinstance(a, Compound) and isinstance(b, Compound):
        if a.functor != b.functor or len(a.args) != len(b.args):
            return False
        return all(_unify_into(x, y, env) for x, y in zip(a.args, b.args))
    if isinstance(a, ListTerm) and isinstance(b, ListTerm):
        return _unify_lists(a, b, env)
    return False


def _unify_lists(a: ListTerm, b: ListTerm, env: Bindings) -> bool:
    n = min(len(a.items), len(b.items))
    for x, y in zip(a.items[:n], b.items[:n]):
        if not _unify_into(x, y, env):
            return False
    rest_a = ListTerm(a.items[n:], a.tail)
    rest_b = ListTerm(b.items[n:], b.tail)
    if rest_a.items and rest_b.items:
        return False  # unreachable: one side is exhausted by construction
    if rest_a.items:
        return rest_b.tail is not None and _unify_into(rest_b.tail, rest_a, env)
    if rest_b.items:
        return rest_a.tail is not None and _unify_into(rest_a.tail, rest_b, env)
    if rest_a.tail is None and rest_b.tail is None:
        return True
    if rest_a.tail is None:
        return _unify_into(rest_b.tail, ListTerm(), env)
    if rest_b.tail is None:
        return _unify_into(rest_a.tail, ListTerm(), env)
    return _unify_into(rest_a.tail, rest_b.tail, env)


# ---------------------------------------------------------------------------
# Arithmetic
# ---------------------------------------------------------------------------

def eval_arith(t: Term, env: Bindings | None = None) -> Fraction:
    """Evaluate an arithmetic expression to an exact rational.

    Raises PrologError: ``unbound`` when a variable is still free,
    ``type_error`` for non-numeric operands / non-integer mod or exponent,
    ``zero_divide`` for division or mod by zero.
    """
    env = env or {}
    t = walk(t, env)
    if isinstance(t, Number):
        return t.value
    if isinstance(t, Var):
        raise PrologError(KIND_UNBOUND, f"variable {t.name} is not bound to a value")
    if isinstance(t, Compound):
        f, n = t.functor, len(t.args)
        if n == 1 and f == "-":
            return -eval_arith(t.args[0], env)
        if n == 2 and f in ("+", "-", "*", "/", "mod", "^"):
            a = eval_arith(t.args[0], env)
            b = eval_arith(t.args[1], env)
            return _apply_binop(f, a, b)
        raise PrologError(KIND_TYPE, f"unknown arithmetic function {f}/{n}")
    raise PrologError(KIND_TYPE, f"{render_term(t)} is not an arithmetic expression")


def _apply_binop(op: str, a: Fraction, b: Fraction) -> Fraction:
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            raise PrologError(KIND_ZERO_DIVIDE, "division by zero")
        return a / b
    if op == "mod":
        if a.denominator != 1 or b.denominator != 1:
            raise PrologError(KIND_TYPE, "mod requires integer operands")
        if b == 0:
            raise PrologError(KIND_ZERO_DIVIDE, "mod by zero")
        # Python's % already gives the result the divisor's sign.
        return Fraction(a.numerator % b.numerator)
    if op == "^":
        if b.denominator != 1 or b < 0:
            raise PrologError(KIND_TYPE, "^ requires a non-negative integer exponent")
        return a ** int(b)
    raise PrologError(KIND_TYPE, f"unknown operator {op}")


_COMPARISONS = {
    "=:=": lambda a, b: a == b,
    "=\\=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
    "=<": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
}


# ---------------------------------------------------------------------------
# The engine
# ---------------------------------------------------------------------------

class Engine:
    """One engine instance runs queries against a fixed program.

    Instances share no mutable state with each other, so independent
    evaluations can run in parallel; a single instance must not be used from
    two contexts at once (it owns the step counter of the running query).
    """

    BUILTIN_INDICATORS = frozenset(
        [
            ("between", 3),
            ("member", 2),
            ("length", 2),
            ("findall", 3),
            ("is", 2),
            ("=", 2),
            ("\\=", 2),
            (",", 2),
        ]
        + [(op, 2) for op in _COMPARISONS]
    )

    def __init__(self, program: Program, registry=None, budget: Budget | None = None):
        if registry is None:
            from .operators import default_registry

            registry = default_registry()
        self.registry = registry
        self.budget = budget or Budget()
        self._index: dict[tuple[str, int], list[Clause]] = {}
        for clause in program.clauses:
            key = indicator(clause.head)
            if key in self.BUILTIN_INDICATORS or key in registry:
                raise PrologError(
                    KIND_DOMAIN, f"cannot redefine reserved predicate {key[0]}/{key[1]}"
                )
            self._index.setdefault(key, []).append(clause)
        self._steps = 0
        self._fresh = 0
        self._deadline = 0.0

    # -- bookkeeping --------------------------------------------------------

    def _tick(self):
        self._steps += 1
        if self._steps > self.budget.max_steps:
            raise BudgetExceededError(f"step budget of {self.budget.max_steps} exhausted")
        if self._steps & _WALL_CHECK_MASK == 0 and time.monotonic() > self._deadline:
            raise BudgetExceededError(f"wall-clock budget of {self.budget.max_wall}s exhausted")

    def _fresh_var(self, base: str = "G") -> Var:
        self._fresh += 1
        return Var(f"_{base}{self._fresh}")

    def _rename_clause(self, clause: Clause) -> Clause:
        mapping: dict[Var, Var] = {}

        def fresh(v: Var) -> Var:
            if v not in mapping:
                # Keep the source name in the fresh name so runtime errors
                # still point at a recognizable variable.
                mapping[v] = self._fresh_var(v.name.lstrip("_") or "G")
            return mapping[v]

        head = map_vars(clause.head, fresh)
        body = tuple(map_vars(g, fresh) for g in clause.body)
        return Clause(head, body)

    def _copy_instance(self, t: Term, env: Bindings) -> Term:
        """Reify a template under ``env`` and freshen any leftover variables,
        so collected findall items never alias the enumeration's variables."""
        snapshot = resolve(t, env)
        mapping: dict[Var, Var] = {}

        def fresh(v: Var) -> Var:
            if v not in mapping:
                mapping[v] = self._fresh_var()
            return mapping[v]

        return map_vars(snapshot, fresh)

    # -- public API ---------------------------------------------------------

    def run(self, goal: Term) -> QueryResult:
        """Run a goal and return its first solution (or failure/error)."""
        self._steps = 0
        self._deadline = time.monotonic() + self.budget.max_wall
        try:
            for env in self._solve((goal,), {}):
                return QueryResult(
                    status="success",
                    steps_used=self._steps,
                    answer=self._extract_answer(goal, env),
                    bindings={v.name: resolve(v, env) for v in iter_vars(goal)},
                )
            return QueryResult(status="failure", steps_used=self._steps)
        except BudgetExceededError as e:
            return QueryResult(status="budget_exceeded", steps_used=self._steps, error_detail=str(e))
        except RecursionError:
            return QueryResult(
                status="budget_exceeded",
                steps_used=self._steps,
                error_detail="resolution depth limit exhausted",
            )
        except PrologError as e:
            return QueryResult(
                status="error", steps_used=self._steps, error_kind=e.kind, error_detail=e.message
            )

    @staticmethod
    def _extract_answer(goal: Term, env: Bindings) -> Term:
        if isinstance(goal, Compound) and len(goal.args) == 1 and isinstance(goal.args[0], Var):
            return resolve(goal.args[0], env)
        return resolve(goal, env)

    # -- resolution ---------------------------------------------------------
    #
    # Backtracking is an explicit stack of choice points rather than nested
    # generators: each stack entry is an iterator over successor states
    # (goals, env) for one goal reduction.  Runaway recursion in a bad
    # program therefore grows a Python list, not the interpreter stack, and
    # is cut off by the depth bound instead of crashing.

    def _solve(self, goals: tuple, env: Bindings) -> Iterator[Bindings]:
        stack: list = [iter(((goals, env),))]
        while stack:
            state = next(stack[-1], None)
            if state is None:
                stack.pop()
                continue
            current_goals, current_env = state
            if not current_goals:
                yield current_env
                continue
            if len(stack) > _MAX_DEPTH:
                raise BudgetExceededError("resolution depth limit exhausted")
            stack.append(self._step(current_goals, current_env))

    def _step(self, goals: tuple, env: Bindings) -> Iterator[tuple]:
        """Successor states for reducing the first goal."""
        self._tick()
        goal = walk(goals[0], env)
        rest = goals[1:]

        if isinstance(goal, Var):
            raise PrologError(KIND_UNBOUND, "goal is an unbound variable")
        if not isinstance(goal, (Atom, Compound)):
            raise PrologError(KIND_TYPE, f"{render_term(goal)} is not a callable goal")

        key = indicator(goal)
        args = goal.args if isinstance(goal, Compound) else ()

        if key == (",", 2):
            return iter((((args[0], args[1]) + rest, env),))

        handler = _BUILTINS.get(key)
        if handler is not None:
            return handler(self, args, env, rest)

        op = self.registry.lookup(*key)
        if op is not None:
            return self._call_operator(op, args, env, rest)

        clauses = self._index.get(key)
        if clauses is not None:
            return self._resolve_clauses(goal, clauses, env, rest)

        raise PrologError(KIND_UNKNOWN_PREDICATE, f"unknown predicate {key[0]}/{key[1]}")

    def _resolve_clauses(self, goal, clauses, env, rest) -> Iterator[tuple]:
        for clause in clauses:
            fresh = self._rename_clause(clause)
            env2 = unify(goal, fresh.head, env)
            if env2 is not None:
                yield fresh.body + rest, env2

    # -- background operators ------------------------------------------------

    def _call_operator(self, op, args: tuple, env: Bindings, rest: tuple) -> Iterator[tuple]:
        from .errors import KIND_NO_SEMANTICS

        if op.fn is None:
            raise PrologError(
                KIND_NO_SEMANTICS,
                f"operator {op.name}/{op.arity} is declared but has no semantics bound",
            )
        in_values = []
        out_args = []
        for arg, mode in zip(args, op.modes):
            if mode == "in":
                in_values.append(self._operator_in_value(arg, env))
            else:
                out_args.append(arg)
        result = op.fn(*in_values)
        if isinstance(result, bool):
            if result:
                yield rest, env
            return
        env2 = unify(out_args[0], Number(result), env)
        if env2 is not None:
            yield rest, env2

    def _operator_in_value(self, arg: Term, env: Bindings):
        t = walk(arg, env)
        if isinstance(t, ListTerm):
            items, tail = self._list_parts(t, env)
            if tail is not None:
                kind = KIND_UNBOUND if isinstance(tail, Var) else KIND_TYPE
                raise PrologError(kind, "operator argument list is not a proper list")
            return [eval_arith(item, env) for item in items]
        return eval_arith(t, env)

    # -- built-ins ------------------------------------------------------------

    def _list_parts(self, t: Term, env: Bindings) -> tuple[list, Term | None]:
        """Collect the known items of a list; the second value is None for a
        proper list, or the non-list terminator (usually an unbound Var)."""
        items: list = []
        t = walk(t, env)
        while isinstance(t, ListTerm):
            items.extend(t.items)
            if t.tail is None:
                return items, None
            t = walk(t.tail, env)
        return items, t

    def _bi_between(self, args, env, rest):
        low = walk(args[0], env)
        high = walk(args[1], env)
        for bound in (low, high):
            if not isinstance(bound, Number) or bound.value.denominator != 1:
                raise PrologError(KIND_TYPE, "between/3 requires ground integer bounds")
        lo, hi = int(low.value), int(high.value)
        x = walk(args[2], env)
        if isinstance(x, Var):
            for n in range(lo, hi + 1):
                self._tick()
                env2 = dict(env)
                env2[x] = Number(n)
                yield rest, env2
            return
        if isinstance(x, Number):
            if x.value.denominator == 1 and lo <= x.value <= hi:
                yield rest, env
            return
        raise PrologError(KIND_TYPE, "between/3 requires an integer or variable")

    def _bi_member(self, args, env, rest):
        items, tail = self._list_parts(args[1], env)
        if tail is not None:
            raise PrologError(KIND_TYPE, "member/2 requires a proper list")
        for item in items:
            self._tick()
            env2 = unify(args[0], item, env)
            if env2 is not None:
                yield rest, env2

    def _bi_length(self, args, env, rest):
        lst = walk(args[0], env)
        if isinstance(lst, ListTerm):
            items, tail = self._list_parts(lst, env)
            if tail is not None:
                raise PrologError(KIND_TYPE, "length/2 requires a proper list")
            env2 = unify(args[1], Number(len(items)), env)
            if env2 is not None:
                yield rest, env2
            return
        if isinstance(lst, Var):
            n = walk(args[1], env)
            if isinstance(n, Number) and n.value.denominator == 1 and n.value >= 0:
                fresh = ListTerm(tuple(self._fresh_var() for _ in range(int(n.value))))
                env2 = unify(lst, fresh, env)
                if env2 is not None:
                    yield rest, env2
                return
            raise PrologError(KIND_TYPE, "length/2 is insufficiently instantiated")
        raise PrologError(KIND_TYPE, "length/2 requires a list")

    def _bi_findall(self, args, env, rest):
        # Enumerate the inner goal to exhaustion in an isolated environment;
        # nothing it binds survives except the collected instances.
        template, goal, out = args
        collected = []
        for env1 in self._solve((goal,), env):
            collected.append(self._copy_instance(template, env1))
        env2 = unify(out, ListTerm(tuple(collected)), env)
        if env2 is not None:
            yield rest, env2

    def _bi_is(self, args, env, rest):
        value = eval_arith(args[1], env)
        env2 = unify(args[0], Number(value), env)
        if env2 is not None:
            yield rest, env2

    def _bi_unify(self, args, env, rest):
        env2 = unify(args[0], args[1], env)
        if env2 is not None:
            yield rest, env2

    def _bi_not_unify(self, args, env, rest):
        if unify(args[0], args[1], env) is None:
            yield rest, env


_BUILTINS = {
    ("between", 3): Engine._bi_between,
    ("member", 2): Engine._bi_member,
    ("length", 2): Engine._bi_length,
    ("findall", 3): Engine._bi_findall,
    ("is", 2): Engine._bi_is,
    ("=", 2): Engine._bi_unify,
    ("\\=", 2): Engine._bi_not_unify,
}
for _op, _fn in _COMPARISONS.items():
    def _make(fn):
        def handler(self, args, env, rest):
            if fn(eval_arith(args[0], env), eval_arith(args[1], env)):
                yield rest, env
        return handler
    _BUILTINS[(_op, 2)] = _make(_fn)
del _op, _fn


def solve_goal(var_name: str = "X") -> Compound:
    """The standard entry goal ``solve(X)``."""
    return Compound("solve", (Var(var_name),))


def solve_query(
    program: Program, goal: Term, budget: Budget | None = None, registry=None
) -> QueryResult:
    """Run ``goal`` against ``program`` and return the first solution.

    All failures are values: unknown predicates, arithmetic errors, and
    exhausted budgets come back in the QueryResult, never as exceptions.
    """
    try:
        engine = Engine(program, registry=registry, budget=budget)
    except PrologError as e:
        return QueryResult(status="error", steps_used=0, error_kind=e.kind, error_detail=e.message)
    return engine.run(goal)
