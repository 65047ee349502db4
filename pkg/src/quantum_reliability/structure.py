"""Structure-function expressions and their textual syntax.

Grammar::

    file := decl* "system" ":=" expr
    decl := "component" IDENT "dim" INT ("matrix" STRING)?
    expr := IDENT | "not" expr | expr "and" expr | expr "or" expr
          | "series" "(" list ")" | "parallel" "(" list ")"
          | "all_of" "(" list ")" | "any_of" "(" list ")"
          | "atleast" INT "of" "(" list ")" | "(" expr ")"

``not`` binds tighter than ``and``, which binds tighter than ``or``.
``#`` starts a comment that runs to the end of the line.

Naming follows the quantum reliability convention, which is the reverse of
the classical one: ``parallel`` survives only if every member survives and
``series`` survives if at least one member does. ``all_of`` and ``any_of``
are spelled-out aliases for the same two operations.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Optional, Union


class StructureSyntaxError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Atom:
    name: str


@dataclass(frozen=True)
class Not:
    expr: "Expr"


@dataclass(frozen=True)
class And:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Or:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class AtLeast:
    k: int
    items: tuple


@dataclass(frozen=True)
class Series:
    items: tuple


@dataclass(frozen=True)
class Parallel:
    items: tuple


Expr = Union[Atom, Not, And, Or, AtLeast, Series, Parallel]


@dataclass(frozen=True)
class ComponentDecl:
    name: str
    dim: int
    matrix: Optional[str] = None


@dataclass(frozen=True)
class StructureProgram:
    components: tuple
    system: Expr


def atoms(expr: Expr) -> list[str]:
    """Component names referenced by ``expr`` in first-appearance order."""
    seen: dict[str, None] = {}

    def walk(e):
        if isinstance(e, Atom):
            seen.setdefault(e.name)
        elif isinstance(e, Not):
            walk(e.expr)
        elif isinstance(e, (And, Or)):
            walk(e.left)
            walk(e.right)
        else:
            for item in e.items:
                walk(item)

    walk(expr)
    return list(seen)


def evaluate(expr: Expr, values: dict[str, bool]) -> bool:
    """Classical Boolean value of ``expr`` for the given component states."""
    if isinstance(expr, Atom):
        return bool(values[expr.name])
    if isinstance(expr, Not):
        return not evaluate(expr.expr, values)
    if isinstance(expr, And):
        return evaluate(expr.left, values) and evaluate(expr.right, values)
    if isinstance(expr, Or):
        return evaluate(expr.left, values) or evaluate(expr.right, values)
    results = [evaluate(e, values) for e in expr.items]
    if isinstance(expr, Parallel):
        return all(results)
    if isinstance(expr, Series):
        return any(results)
    return sum(results) >= expr.k


def to_text(expr: Expr) -> str:
    """Render ``expr`` back into the concrete syntax (fully parenthesised)."""
    if isinstance(expr, Atom):
        return expr.name
    if isinstance(expr, Not):
        return f"not {to_text(expr.expr)}"
    if isinstance(expr, And):
        return f"({to_text(expr.left)} and {to_text(expr.right)})"
    if isinstance(expr, Or):
        return f"({to_text(expr.left)} or {to_text(expr.right)})"
    inner = ", ".join(to_text(e) for e in expr.items)
    if isinstance(expr, Parallel):
        return f"parallel({inner})"
    if isinstance(expr, Series):
        return f"series({inner})"
    return f"atleast {expr.k} of ({inner})"


# --- lexer -----------------------------------------------------------------

KEYWORDS = {
    "not", "and", "or", "series", "parallel", "all_of", "any_of",
    "atleast", "of", "component", "dim", "matrix", "system",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<assign>:=)
  | (?P<punct>[(),])
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    line: int
    col: int


def tokenize(text: str) -> Iterator[Token]:
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise StructureSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        pos = m.end()
        if kind == "newline":
            line += 1
            line_start = pos
            continue
        if kind in ("ws", "comment"):
            continue
        if kind == "ident" and value in KEYWORDS:
            kind = value
        elif kind == "punct" or kind == "assign":
            kind = value
        elif kind == "string":
            value = value[1:-1]
        yield Token(kind, value, line, col)
    yield Token("eof", "", line, pos - line_start + 1)


# --- parser ----------------------------------------------------------------

_LIST_OPS = {"series": Series, "parallel": Parallel, "all_of": Parallel, "any_of": Series}


class _Parser:
    def __init__(self, text: str):
        self.tokens = list(tokenize(text))
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str, what: Optional[str] = None) -> Token:
        t = self.tok
        if t.kind != kind:
            found = "end of input" if t.kind == "eof" else repr(t.value)
            raise StructureSyntaxError(f"expected {what or repr(kind)}, found {found}", t.line, t.col)
        return self.advance()

    def program(self) -> StructureProgram:
        decls = []
        names = set()
        while self.tok.kind == "component":
            start = self.advance()
            name = self.expect("ident", "component name").value
            if name in names:
                raise StructureSyntaxError(f"component {name!r} declared twice", start.line, start.col)
            names.add(name)
            self.expect("dim", "'dim'")
            dim_tok = self.expect("int", "dimension")
            dim = int(dim_tok.value)
            if dim < 2:
                raise StructureSyntaxError("component dimension must be at least 2", dim_tok.line, dim_tok.col)
            path = None
            if self.tok.kind == "matrix":
                self.advance()
                path = self.expect("string", "quoted matrix path").value
            decls.append(ComponentDecl(name, dim, path))
        self.expect("system", "'component' or 'system'")
        self.expect(":=", "':='")
        expr = self.expr()
        self.expect("eof", "end of input")
        return StructureProgram(tuple(decls), expr)

    def expr(self) -> Expr:
        left = self.conjunction()
        while self.tok.kind == "or":
            self.advance()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Expr:
        left = self.unary()
        while self.tok.kind == "and":
            self.advance()
            left = And(left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.tok.kind == "not":
            self.advance()
            return Not(self.unary())
        return self.primary()

    def primary(self) -> Expr:
        t = self.tok
        if t.kind == "ident":
            self.advance()
            return Atom(t.value)
        if t.kind == "(":
            self.advance()
            e = self.expr()
            self.expect(")", "')'")
            return e
        if t.kind in _LIST_OPS:
            self.advance()
            return _LIST_OPS[t.kind](self.item_list())
        if t.kind == "atleast":
            self.advance()
            k_tok = self.expect("int", "threshold")
            self.expect("of", "'of'")
            items = self.item_list()
            k = int(k_tok.value)
            if not 1 <= k <= len(items):
                raise StructureSyntaxError(
                    f"threshold {k} outside 1..{len(items)}", k_tok.line, k_tok.col
                )
            return AtLeast(k, items)
        found = "end of input" if t.kind == "eof" else repr(t.value)
        raise StructureSyntaxError(f"expected an expression, found {found}", t.line, t.col)

    def item_list(self) -> tuple:
        self.expect("(", "'('")
        items = [self.expr()]
        while self.tok.kind == ",":
            self.advance()
            items.append(self.expr())
        self.expect(")", "')' or ','")
        return tuple(items)


def parse_structure(text: str) -> Expr:
    """Parse a bare structure expression such as ``"q1 and not q2"``."""
    p = _Parser(text)
    e = p.expr()
    p.expect("eof", "end of input")
    return e


def parse_program(text: str) -> StructureProgram:
    """Parse a structure file: component declarations then ``system := expr``."""
    return _Parser(text).program()
