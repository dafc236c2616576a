"""Syntax objects for the restricted logic-programming subset.

Terms are immutable; every structural transformation builds new objects.
Numbers are exact rationals (``fractions.Fraction``), which keeps answer
comparison decidable: a value is either equal or it is not.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Union

Term = Union["Atom", "Number", "Var", "Compound", "ListTerm"]

_PLAIN_ATOM = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_VAR_NAME = re.compile(r"[A-Z_][A-Za-z0-9_]*\Z")


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Number:
    """An exact rational constant. Accepts int or Fraction; floats are rejected
    so inexact values can never leak into a program."""

    value: Fraction

    def __post_init__(self):
        v = self.value
        if isinstance(v, bool) or isinstance(v, float):
            raise TypeError(f"Number requires an int or Fraction, got {v!r}")
        if not isinstance(v, Fraction):
            object.__setattr__(self, "value", Fraction(v))


@dataclass(frozen=True)
class Var:
    name: str

    def __post_init__(self):
        if not _VAR_NAME.match(self.name):
            raise ValueError(f"invalid variable name {self.name!r}")


@dataclass(frozen=True)
class Compound:
    functor: str
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) == 0:
            raise ValueError("compound terms need at least one argument; use Atom")


@dataclass(frozen=True)
class ListTerm:
    """A list with an optional tail term (``[a, b | T]``).

    A ListTerm tail is merged on construction, so ``tail`` is never itself a
    ListTerm; a proper list has ``tail is None``.
    """

    items: tuple = ()
    tail: Term | None = None

    def __post_init__(self):
        items = tuple(self.items)
        tail = self.tail
        while isinstance(tail, ListTerm):
            items = items + tuple(tail.items)
            tail = tail.tail
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "tail", tail)


EMPTY_LIST = ListTerm()


@dataclass(frozen=True)
class Clause:
    """``head.`` when body is empty, otherwise ``head :- goal, goal, ...``."""

    head: Term
    body: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        if not isinstance(self.head, (Atom, Compound)):
            raise ValueError("clause head must be an atom or a compound term")

    @property
    def is_fact(self) -> bool:
        return not self.body


@dataclass(frozen=True)
class Program:
    """An ordered set of clauses. Resolution order follows clause order, so
    the order is part of the program's meaning."""

    clauses: tuple
    source_text: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "clauses", tuple(self.clauses))


def indicator(t: Term) -> tuple[str, int]:
    """(functor, arity) of a callable term; atoms have arity 0."""
    if isinstance(t, Atom):
        return (t.name, 0)
    if isinstance(t, Compound):
        return (t.functor, len(t.args))
    raise TypeError(f"not a callable term: {t!r}")


def iter_vars(t: Term) -> Iterator[Var]:
    """Yield every variable occurrence, depth-first, left to right."""
    if isinstance(t, Var):
        yield t
    elif isinstance(t, Compound):
        for a in t.args:
            yield from iter_vars(a)
    elif isinstance(t, ListTerm):
        for a in t.items:
            yield from iter_vars(a)
        if t.tail is not None:
            yield from iter_vars(t.tail)


def clause_vars(c: Clause) -> list[Var]:
    """Distinct variables of a clause in first-occurrence order (head first)."""
    seen: dict[Var, None] = {}
    for t in (c.head, *c.body):
        for v in iter_vars(t):
            seen.setdefault(v)
    return list(seen)


def map_vars(t: Term, fn: Callable[[Var], Term]) -> Term:
    """Rebuild ``t`` with every variable replaced by ``fn(var)``."""
    if isinstance(t, Var):
        return fn(t)
    if isinstance(t, Compound):
        return Compound(t.functor, tuple(map_vars(a, fn) for a in t.args))
    if isinstance(t, ListTerm):
        items = tuple(map_vars(a, fn) for a in t.items)
        tail = map_vars(t.tail, fn) if t.tail is not None else None
        return ListTerm(items, tail)
    return t


# ---------------------------------------------------------------------------
# Operator tables (shared by the reader and the renderer).
#
# Standard precedences; the value is (priority, type).  Lower priority binds
# tighter.  ``xfx`` arguments must be strictly below the operator's priority,
# the ``y`` side of ``xfy``/``yfx`` may be equal.
# ---------------------------------------------------------------------------

INFIX_OPERATORS: dict[str, tuple[int, str]] = {
    ":-": (1200, "xfx"),
    ",": (1000, "xfy"),
    "=": (700, "xfx"),
    "\\=": (700, "xfx"),
    "is": (700, "xfx"),
    "=:=": (700, "xfx"),
    "=\\=": (700, "xfx"),
    "<": (700, "xfx"),
    ">": (700, "xfx"),
    "=<": (700, "xfx"),
    ">=": (700, "xfx"),
    "+": (500, "yfx"),
    "-": (500, "yfx"),
    "*": (400, "yfx"),
    "/": (400, "yfx"),
    "mod": (400, "yfx"),
    "^": (200, "xfy"),
}

PREFIX_OPERATORS: dict[str, int] = {"-": 200}


def _infix_arg_priorities(priority: int, optype: str) -> tuple[int, int]:
    if optype == "xfx":
        return priority - 1, priority - 1
    if optype == "xfy":
        return priority - 1, priority
    return priority, priority - 1  # yfx


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _atom_text(name: str) -> str:
    if _PLAIN_ATOM.match(name):
        return name
    escaped = name.replace("\\", "\\\\").replace("'", "\\'")
    return f"'{escaped}'"


def _number_text(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def _flatten_comma(t: Term) -> list[Term]:
    if isinstance(t, Compound) and t.functor == "," and len(t.args) == 2:
        return [t.args[0]] + _flatten_comma(t.args[1])
    return [t]


def _render(t: Term, max_priority: int) -> str:
    if isinstance(t, Atom):
        return _atom_text(t.name)
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Number):
        text = _number_text(t.value)
        # A negative literal binds like prefix minus; parenthesize where a
        # bare "-" would be re-read as an operator on the wrong operand.
        if t.value < 0 and max_priority < 200:
            return f"({text})"
        return text
    if isinstance(t, ListTerm):
        inner = ", ".join(_render(x, 999) for x in t.items)
        if t.tail is not None:
            inner += f"|{_render(t.tail, 999)}"
        return f"[{inner}]"
    if isinstance(t, Compound):
        if t.functor == "," and len(t.args) == 2:
            parts = ", ".join(_render(x, 999) for x in _flatten_comma(t))
            return f"({parts})"
        if len(t.args) == 2 and t.functor in INFIX_OPERATORS:
            priority, optype = INFIX_OPERATORS[t.functor]
            lp, rp = _infix_arg_priorities(priority, optype)
            text = f"{_render(t.args[0], lp)} {t.functor} {_render(t.args[1], rp)}"
            return f"({text})" if priority > max_priority else text
        if len(t.args) == 1 and t.functor == "-":
            arg = t.args[0]
            if isinstance(arg, Number):
                # "-(3)" keeps the compound distinct from the literal -3.
                return f"-({_render(arg, 999)})"
            text = f"-{_render(arg, 200)}"
            return f"({text})" if 200 > max_priority else text
        args = ", ".join(_render(a, 999) for a in t.args)
        return f"{_atom_text(t.functor)}({args})"
    raise TypeError(f"cannot render {t!r}")


def render_term(t: Term) -> str:
    return _render(t, 999)


def render_clause(c: Clause) -> str:
    head = _render(c.head, 999)
    if c.is_fact:
        return f"{head}."
    body = ", ".join(_render(g, 999) for g in c.body)
    return f"{head} :- {body}."


def render_program(p: Program) -> str:
    return "".join(render_clause(c) + "\n" for c in p.clauses)


def render(x) -> str:
    """Render a Term, Clause, or Program back to source text."""
    if isinstance(x, Program):
        return render_program(x)
    if isinstance(x, Clause):
        return render_clause(x)
    return render_term(x)


# ---------------------------------------------------------------------------
# Canonical form
# ---------------------------------------------------------------------------

def rename_clause_vars(c: Clause, prefix: str = "V") -> Clause:
    """Alpha-rename a clause's variables to ``V0, V1, ...`` in first-occurrence
    order. The mapping is applied simultaneously, so swaps cannot capture."""
    mapping = {v: Var(f"{prefix}{i}") for i, v in enumerate(clause_vars(c))}
    fn = lambda v: mapping[v]
    return Clause(map_vars(c.head, fn), tuple(map_vars(g, fn) for g in c.body))


def canonicalize(p: Program) -> Program:
    """Normalize a program for distinctness checks.

    Comments and layout are already gone after parsing; this renames variables
    per clause and re-renders deterministically.  The result is a fixed point:
    canonicalizing a canonical program changes nothing.
    """
    clauses = tuple(rename_clause_vars(c) for c in p.clauses)
    out = Program(clauses)
    return Program(clauses, source_text=render_program(out))
