"""Reader for the restricted logic-programming subset.

Hand-written tokenizer plus a precedence-climbing term parser.  The grammar
covers exactly what solution programs need: facts, one-rule bodies, the
standard comparison/arithmetic operators, lists, parenthesized tuples, and
``%`` line comments.  Everything else is a ParseError with a position.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import ParseError
from .terms import (
    Atom,
    Clause,
    Compound,
    Var,
    INFIX_OPERATORS,
    ListTerm,
    Number,
    Program,
    Term,
    _infix_arg_priorities,
)

_SYMBOL_CHARS = set("+-*/\\^<>=:")
# Longest match first when splitting a run of symbol characters.
_SYMBOL_OPS = sorted(
    [":-", "=:=", "=\\=", "\\=", "=<", ">=", "=", "<", ">", "+", "-", "*", "/", "^"],
    key=len,
    reverse=True,
)
_RESERVED_VAR = re.compile(r"_Anon\d+\Z")


@dataclass(frozen=True)
class Token:
    kind: str           # "atom" | "qatom" | "var" | "number" | "punct" | "end" | "eof"
    text: str
    line: int
    col: int
    value: object = None
    func_paren: bool = False  # "(" directly attached to an atom


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.line, self.col)

    def _advance(self, n: int = 1):
        for _ in range(n):
            if self.pos < len(self.text) and self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def _peek(self, offset: int = 0) -> str:
        i = self.pos + offset
        return self.text[i] if i < len(self.text) else ""

    def tokens(self) -> list[Token]:
        out: list[Token] = []
        while True:
            tok = self._next(out)
            out.append(tok)
            if tok.kind == "eof":
                return out

    def _make(self, kind: str, text: str, line: int, col: int, value=None, func_paren=False) -> Token:
        return Token(kind, text, line, col, value, func_paren)

    def _next(self, emitted: list[Token]) -> Token:
        while True:
            c = self._peek()
            if c == "":
                return self._make("eof", "", self.line, self.col)
            if c in " \t\r\n":
                self._advance()
                continue
            if c == "%":
                while self._peek() not in ("", "\n"):
                    self._advance()
                continue
            break

        line, col, start = self.line, self.col, self.pos
        c = self._peek()

        if c.isdigit():
            return self._number(line, col)

        if c.islower():
            while self._peek().isalnum() or self._peek() == "_":
                self._advance()
            return self._make("atom", self.text[start:self.pos], line, col)

        if c.isupper() or c == "_":
            while self._peek().isalnum() or self._peek() == "_":
                self._advance()
            return self._make("var", self.text[start:self.pos], line, col)

        if c == "'":
            return self._quoted_atom(line, col)

        if c == ".":
            nxt = self._peek(1)
            if nxt == "" or nxt in " \t\r\n%":
                self._advance()
                return self._make("end", ".", line, col)
            raise self.error("'.' only ends a clause; expected layout after it")

        if c in "()[]|,":
            self._advance()
            if c == "(":
                prev = emitted[-1] if emitted else None
                attached = (
                    prev is not None
                    and prev.kind in ("atom", "qatom")
                    and start > 0
                    and not self.text[start - 1].isspace()
                    and self.text[start - 1] != "%"
                )
                return self._make("punct", "(", line, col, func_paren=attached)
            return self._make("punct", c, line, col)

        if c in _SYMBOL_CHARS:
            while self._peek() in _SYMBOL_CHARS:
                self._advance()
            run = self.text[start:self.pos]
            return self._split_symbol_run(run, line, col)

        raise self.error(f"unexpected character {c!r}")

    def _split_symbol_run(self, run: str, line: int, col: int) -> Token:
        # Emit the longest known operator prefix; push the rest back.
        for op in _SYMBOL_OPS:
            if run.startswith(op):
                rest = len(run) - len(op)
                if rest:
                    self.pos -= rest
                    self.col -= rest
                return self._make("atom", op, line, col)
        raise ParseError(f"unknown operator {run!r}", line, col)

    def _number(self, line: int, col: int) -> Token:
        start = self.pos
        while self._peek().isdigit():
            self._advance()
        if self._peek() == "." and self._peek(1).isdigit():
            self._advance()
            while self._peek().isdigit():
                self._advance()
        text = self.text[start:self.pos]
        # Fraction("0.5") is exact: decimal literals become rationals here.
        return self._make("number", text, line, col, value=Fraction(text))

    def _quoted_atom(self, line: int, col: int) -> Token:
        self._advance()  # opening quote
        chars: list[str] = []
        while True:
            c = self._peek()
            if c == "":
                raise ParseError("unterminated quoted atom", line, col)
            if c == "\\":
                esc = self._peek(1)
                if esc in ("\\", "'"):
                    chars.append(esc)
                    self._advance(2)
                    continue
                if esc == "n":
                    chars.append("\n")
                    self._advance(2)
                    continue
                chars.append("\\")
                self._advance()
                continue
            if c == "'":
                if self._peek(1) == "'":
                    chars.append("'")
                    self._advance(2)
                    continue
                self._advance()
                return self._make("qatom", "".join(chars), line, col)
            chars.append(c)
            self._advance()


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self._anon_count = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(message, tok.line, tok.col)

    def expect_punct(self, text: str):
        tok = self.next()
        if tok.kind != "punct" or tok.text != text:
            raise self.error(f"expected {text!r}, found {tok.text!r}", tok)

    # -- clause level -------------------------------------------------------

    def parse_program(self, source: str) -> Program:
        clauses: list[Clause] = []
        while self.peek().kind != "eof":
            clauses.append(self.parse_clause())
        return Program(tuple(clauses), source_text=source)

    def parse_clause(self) -> Clause:
        self._anon_count = 0
        start = self.peek()
        term, _ = self.parse_expr(1200)
        tok = self.next()
        if tok.kind != "end":
            raise self.error(f"expected '.' to end the clause, found {tok.text!r}", tok)
        if isinstance(term, Compound) and term.functor == ":-" and len(term.args) == 2:
            head, body = term.args
            if not isinstance(head, (Atom, Compound)):
                raise self.error("clause head must be an atom or compound term", start)
            return Clause(head, tuple(self._flatten_body(body)))
        if not isinstance(term, (Atom, Compound)):
            raise self.error("clause head must be an atom or compound term", start)
        return Clause(term, ())

    def _flatten_body(self, t: Term) -> list[Term]:
        if isinstance(t, Compound) and t.functor == "," and len(t.args) == 2:
            return self._flatten_body(t.args[0]) + self._flatten_body(t.args[1])
        return [t]

    # -- term level ---------------------------------------------------------

    def parse_expr(self, max_priority: int) -> tuple[Term, int]:
        left, left_priority = self.parse_primary()
        while True:
            tok = self.peek()
            if tok.kind == "punct" and tok.text == ",":
                name = ","
            elif tok.kind == "atom" and tok.text in INFIX_OPERATORS:
                name = tok.text
            else:
                break
            priority, optype = INFIX_OPERATORS[name]
            lmax, rmax = _infix_arg_priorities(priority, optype)
            if priority > max_priority or left_priority > lmax:
                break
            self.next()
            right, _ = self.parse_expr(rmax)
            folded = self._fold_ratio(name, left, right)
            if folded is not None:
                left = folded
                left_priority = 200 if folded.value < 0 else 0
            else:
                left = Compound(name, (left, right))
                left_priority = priority
        return left, left_priority

    def _fold_ratio(self, name: str, left: Term, right: Term) -> Number | None:
        # "2/3" is a rational literal, not a division to perform later.
        if name != "/" or not isinstance(left, Number) or not isinstance(right, Number):
            return None
        if right.value == 0:
            return None  # leave it for the evaluator to report
        return Number(left.value / right.value)

    def parse_primary(self) -> tuple[Term, int]:
        tok = self.next()

        if tok.kind == "number":
            return Number(tok.value), 0

        if tok.kind == "var":
            name = tok.text
            if name == "_":
                name = f"_Anon{self._anon_count}"
                self._anon_count += 1
            elif _RESERVED_VAR.match(name):
                raise self.error(f"variable name {tok.text!r} is reserved", tok)
            return Var(name), 0

        if tok.kind in ("atom", "qatom"):
            nxt = self.peek()
            if nxt.kind == "punct" and nxt.text == "(" and nxt.func_paren:
                self.next()
                args = self.parse_arg_list(tok)
                return Compound(tok.text, tuple(args)), 0
            if tok.kind == "atom" and tok.text == "-":
                operand, _ = self.parse_expr(200)
                if isinstance(operand, Number):
                    return Number(-operand.value), 200
                return Compound("-", (operand,)), 200
            if tok.kind == "atom" and tok.text == ":-":
                raise self.error("directives are not supported", tok)
            if tok.kind == "atom" and tok.text in INFIX_OPERATORS and tok.text not in ("is", "mod"):
                raise self.error(f"operator {tok.text!r} cannot start a term", tok)
            return Atom(tok.text), 0

        if tok.kind == "punct" and tok.text == "(":
            inner, _ = self.parse_expr(1200)
            self.expect_punct(")")
            return inner, 0

        if tok.kind == "punct" and tok.text == "[":
            return self.parse_list(), 0

        raise self.error(f"unexpected {tok.text or tok.kind!r}", tok)

    def parse_arg_list(self, opener: Token) -> list[Term]:
        if self.peek().kind == "punct" and self.peek().text == ")":
            raise self.error("compound terms need at least one argument", opener)
        args = [self.parse_expr(999)[0]]
        while self.peek().kind == "punct" and self.peek().text == ",":
            self.next()
            args.append(self.parse_expr(999)[0])
        self.expect_punct(")")
        return args

    def parse_list(self) -> Term:
        if self.peek().kind == "punct" and self.peek().text == "]":
            self.next()
            return ListTerm()
        items = [self.parse_expr(999)[0]]
        while self.peek().kind == "punct" and self.peek().text == ",":
            self.next()
            items.append(self.parse_expr(999)[0])
        tail: Term | None = None
        if self.peek().kind == "punct" and self.peek().text == "|":
            self.next()
            tail = self.parse_expr(999)[0]
        self.expect_punct("]")
        return ListTerm(tuple(items), tail)


def parse_program(text: str) -> Program:
    """Parse source text into a Program.

    Re-rendering the result and parsing it again yields a structurally
    identical program; that round trip is part of the reader's contract.
    """
    parser = _Parser(_Tokenizer(text).tokens())
    return parser.parse_program(text)


def parse_query(text: str) -> Term:
    """Parse a single goal term such as ``solve(X)``; a trailing '.' is optional."""
    stripped = text.strip()
    if not stripped.endswith("."):
        stripped += " ."
    parser = _Parser(_Tokenizer(stripped).tokens())
    term, _ = parser.parse_expr(1200)
    tok = parser.next()
    if tok.kind != "end" or parser.peek().kind != "eof":
        raise parser.error("expected a single goal term", tok)
    if isinstance(term, Compound) and term.functor == ":-":
        raise ParseError("a query must be a goal, not a clause")
    return term


def canonical_text(source: str) -> str:
    """Canonical source for distinctness checks; see terms.canonicalize."""
    from .terms import canonicalize

    return canonicalize(parse_program(source)).source_text
