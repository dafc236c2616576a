"""The whitelisted background operator library.

Every solution program is composed from these predicates plus the engine
built-ins; anything else is an unknown predicate.  The registry ships the
core combinatorics/probability set and can absorb further operators from a
manifest file (declarations) plus ``bind_semantics`` (implementations).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable

from .errors import (
    KIND_DOMAIN,
    KIND_NO_SEMANTICS,
    KIND_TYPE,
    KIND_UNKNOWN_PREDICATE,
    KIND_ZERO_DIVIDE,
    ManifestError,
    PrologError,
)

_NAME_RE = re.compile(r"[a-z][a-z0-9_]*\Z")


@dataclass(frozen=True)
class OperatorDef:
    """One whitelisted predicate.

    ``modes`` has one entry per argument: "in" arguments must be ground
    numbers (or lists of numbers) at call time, the single "out" argument is
    unified with the computed value.  ``fn`` maps the in-values to a Fraction,
    or to a bool for pure test operators; None marks a declared operator whose
    implementation has not been bound yet.
    """

    name: str
    arity: int
    modes: tuple
    doc_line: str
    fn: Callable | None = None

    def __post_init__(self):
        if len(self.modes) != self.arity:
            raise ValueError(f"{self.name}/{self.arity}: need one mode per argument")
        if any(m not in ("in", "out") for m in self.modes):
            raise ValueError(f"{self.name}/{self.arity}: modes must be 'in' or 'out'")
        if sum(1 for m in self.modes if m == "out") > 1:
            raise ValueError(f"{self.name}/{self.arity}: at most one out argument")


class OperatorRegistry:
    """Immutable-after-startup table of operators, keyed by (name, arity)."""

    def __init__(self):
        self._entries: dict[tuple[str, int], OperatorDef] = {}

    def register(self, op: OperatorDef):
        key = (op.name, op.arity)
        if key in self._entries:
            raise ValueError(f"operator {op.name}/{op.arity} is already registered")
        self._entries[key] = op

    def bind_semantics(self, name: str, arity: int, fn: Callable):
        """Attach an implementation to a manifest-declared operator."""
        key = (name, arity)
        entry = self._entries.get(key)
        if entry is None:
            raise KeyError(f"operator {name}/{arity} is not registered")
        if entry.fn is not None:
            raise ValueError(f"operator {name}/{arity} already has semantics")
        self._entries[key] = OperatorDef(entry.name, entry.arity, entry.modes, entry.doc_line, fn)

    def lookup(self, name: str, arity: int) -> OperatorDef | None:
        return self._entries.get((name, arity))

    def __contains__(self, key: tuple[str, int]) -> bool:
        return key in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> list[OperatorDef]:
        return list(self._entries.values())


# ---------------------------------------------------------------------------
# Core semantics.  All checks raise PrologError so the engine can surface
# them as runtime errors with stable kinds.
# ---------------------------------------------------------------------------

def _as_int(v: Fraction, context: str) -> int:
    if not isinstance(v, Fraction) or v.denominator != 1:
        raise PrologError(KIND_TYPE, f"{context} requires an integer")
    return int(v)


def _as_list(v, context: str) -> list:
    if not isinstance(v, list):
        raise PrologError(KIND_TYPE, f"{context} requires a list of numbers")
    return v


def _factorial(n: Fraction) -> Fraction:
    i = _as_int(n, "factorial/2")
    if i < 0:
        raise PrologError(KIND_DOMAIN, "factorial/2 requires a non-negative integer")
    return Fraction(math.factorial(i))


def _combination(n: Fraction, k: Fraction) -> Fraction:
    ni = _as_int(n, "combination/3")
    ki = _as_int(k, "combination/3")
    if ni < 0 or ki < 0 or ki > ni:
        raise PrologError(KIND_DOMAIN, f"combination({ni}, {ki}) is outside 0 <= k <= n")
    return Fraction(math.comb(ni, ki))


def _permutation(n: Fraction, k: Fraction) -> Fraction:
    ni = _as_int(n, "permutation/3")
    ki = _as_int(k, "permutation/3")
    if ni < 0 or ki < 0 or ki > ni:
        raise PrologError(KIND_DOMAIN, f"permutation({ni}, {ki}) is outside 0 <= k <= n")
    return Fraction(math.perm(ni, ki))


def _power(base: Fraction, exponent: Fraction) -> Fraction:
    e = _as_int(exponent, "power/3")
    if e < 0:
        raise PrologError(KIND_TYPE, "power/3 requires a non-negative integer exponent")
    return base ** e


def _probability_complement(p: Fraction) -> Fraction:
    return Fraction(1) - p


def _multiplication_principle(values) -> Fraction:
    out = Fraction(1)
    for v in _as_list(values, "multiplication_principle/2"):
        out *= v
    return out


def _addition_principle(values) -> Fraction:
    out = Fraction(0)
    for v in _as_list(values, "addition_principle/2"):
        out += v
    return out


def _division_principle(a: Fraction, b: Fraction) -> Fraction:
    if b == 0:
        raise PrologError(KIND_ZERO_DIVIDE, "division_principle/3 divisor is zero")
    return a / b


def _difference(a: Fraction, b: Fraction) -> Fraction:
    return a - b


def _palindrome(n: Fraction) -> bool:
    i = _as_int(n, "palindrome/1")
    if i < 0:
        raise PrologError(KIND_DOMAIN, "palindrome/1 requires a non-negative integer")
    digits = str(i)
    return digits == digits[::-1]


_CORE = [
    OperatorDef("factorial", 2, ("in", "out"),
                "product of the integers from 1 to n", _factorial),
    OperatorDef("combination", 3, ("in", "in", "out"),
                "number of ways to choose k items from n, order ignored", _combination),
    OperatorDef("permutation", 3, ("in", "in", "out"),
                "number of ordered arrangements of k items drawn from n", _permutation),
    OperatorDef("power", 3, ("in", "in", "out"),
                "base raised to a non-negative integer exponent", _power),
    OperatorDef("probability_complement", 2, ("in", "out"),
                "one minus the given probability", _probability_complement),
    OperatorDef("multiplication_principle", 2, ("in", "out"),
                "product of all numbers in the input list", _multiplication_principle),
    OperatorDef("addition_principle", 2, ("in", "out"),
                "sum of all numbers in the input list", _addition_principle),
    OperatorDef("division_principle", 3, ("in", "in", "out"),
                "first number divided by the second", _division_principle),
    OperatorDef("difference", 3, ("in", "in", "out"),
                "first number minus the second", _difference),
    OperatorDef("palindrome", 1, ("in",),
                "succeeds when the integer's digits read the same in both directions", _palindrome),
]


def default_registry() -> OperatorRegistry:
    registry = OperatorRegistry()
    for op in _CORE:
        registry.register(op)
    return registry


def apply_operator(name: str, in_args: list, registry: OperatorRegistry | None = None):
    """Call an operator directly on already-evaluated in-arguments.

    Returns the computed Fraction, or a bool for test operators.
    """
    registry = registry or default_registry()
    for op in registry.entries():
        if op.name == name and sum(1 for m in op.modes if m == "in") == len(in_args):
            if op.fn is None:
                raise PrologError(
                    KIND_NO_SEMANTICS, f"operator {op.name}/{op.arity} has no semantics bound"
                )
            return op.fn(*in_args)
    raise PrologError(KIND_UNKNOWN_PREDICATE, f"no operator named {name} takes {len(in_args)} inputs")


def prompt_block(registry: OperatorRegistry | None = None) -> str:
    """Deterministic one-line-per-operator listing for prompt templates."""
    registry = registry or default_registry()
    lines = []
    for op in sorted(registry.entries(), key=lambda o: (o.name, o.arity)):
        modes = ", ".join(op.modes)
        lines.append(f"{op.name}({modes}) - {op.doc_line}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Manifest loading
#
# Line format:   name/arity modestring doc text...
# where modestring is one 'i' or 'o' per argument, e.g.
#
#   sum_of_squares/2 io sum of the squares of the numbers in the list
#
# Declared operators are recognized by the whitelist and listed in prompts;
# calling one before bind_semantics() attaches an implementation is a
# runtime error.
# ---------------------------------------------------------------------------

def load_manifest(path, registry: OperatorRegistry | None = None) -> OperatorRegistry:
    registry = registry or default_registry()
    text = Path(path).read_text(encoding="utf-8")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(maxsplit=2)
        if len(parts) < 3:
            raise ManifestError(f"{path}:{lineno}: expected 'name/arity modes doc...'")
        head, modestring, doc = parts
        if "/" not in head:
            raise ManifestError(f"{path}:{lineno}: missing '/arity' in {head!r}")
        name, _, arity_text = head.partition("/")
        if not _NAME_RE.match(name):
            raise ManifestError(f"{path}:{lineno}: bad operator name {name!r}")
        try:
            arity = int(arity_text)
        except ValueError:
            raise ManifestError(f"{path}:{lineno}: bad arity {arity_text!r}") from None
        if arity < 1:
            raise ManifestError(f"{path}:{lineno}: arity must be at least 1")
        if len(modestring) != arity or any(ch not in "io" for ch in modestring):
            raise ManifestError(
                f"{path}:{lineno}: mode string {modestring!r} must be {arity} chars of 'i'/'o'"
            )
        modes = tuple("in" if ch == "i" else "out" for ch in modestring)
        try:
            registry.register(OperatorDef(name, arity, modes, doc.strip(), None))
        except ValueError as e:
            raise ManifestError(f"{path}:{lineno}: {e}") from None
    return registry
