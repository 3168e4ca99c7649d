"""Terms of the record calculus, a recursive-descent parser and a printer.

Concrete syntax::

    term   := "let" "rec" ident "=" term "in" term
            | "fun" ident "->" term
            | ext
    ext    := app { "with" "{" ident "=" term "}" }
    app    := atom { atom }
    atom   := prim { "." ident }
    prim   := integer | ident | record | "(" term ")"
    record := "{" [ ident "=" term { "," ident "=" term } ] "}"

``//`` starts a comment that runs to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

__all__ = [
    "Term",
    "IntLit",
    "Var",
    "Lam",
    "App",
    "Record",
    "Proj",
    "LetRec",
    "Extend",
    "ParseError",
    "DuplicateLabel",
    "RESERVED",
    "parse",
    "print_term",
    "free_vars",
]

RESERVED = frozenset({"fun", "let", "rec", "in", "with"})


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Lam:
    param: str
    body: Term


@dataclass(frozen=True)
class App:
    fn: Term
    arg: Term


@dataclass(frozen=True)
class Record:
    fields: tuple[tuple[str, Term], ...]

    def __post_init__(self):
        labels = [label for label, _ in self.fields]
        if len(set(labels)) != len(labels):
            dup = next(l for l in labels if labels.count(l) > 1)
            raise DuplicateLabel(f"duplicate label {dup!r} in record", 0, 0)


@dataclass(frozen=True)
class Proj:
    subject: Term
    label: str


@dataclass(frozen=True)
class LetRec:
    name: str
    bound: Term
    body: Term


@dataclass(frozen=True)
class Extend:
    subject: Term
    label: str
    value: Term


Term = Union[IntLit, Var, Lam, App, Record, Proj, LetRec, Extend]


class ParseError(Exception):
    """Malformed source text; ``line`` and ``column`` are 1-based."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column

    def __str__(self):
        return f"{self.line}:{self.column}: {self.message}"


class DuplicateLabel(ParseError):
    pass


# ---------------------------------------------------------------------------
# lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|//[^\n]*)
  | (?P<int>[0-9]+)
  | (?P<ident>[A-Za-z][A-Za-z0-9_]*)
  | (?P<arrow>->)
  | (?P<punct>[{}()=,.])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "int", "ident", "kw", "sym", "eof"
    text: str
    line: int
    column: int


def tokenize(source: str) -> Iterator[Token]:
    pos = 0
    line, line_start = 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", line, col)
        kind = m.lastgroup
        text = m.group()
        if kind == "ws":
            newlines = text.count("\n")
            if newlines:
                line += newlines
                line_start = pos + text.rindex("\n") + 1
        elif kind == "int":
            yield Token("int", text, line, col)
        elif kind == "ident":
            yield Token("kw" if text in RESERVED else "ident", text, line, col)
        else:
            yield Token("sym", text, line, col)
        pos = m.end()
    yield Token("eof", "", line, pos - line_start + 1)


# ---------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, source: str):
        self.tokens = list(tokenize(source))
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        return ParseError(f"{message}, found {found}", tok.line, tok.column)

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.tok
        return tok.kind == kind and (text is None or tok.text == text)

    def expect(self, kind: str, text: str | None = None, what: str | None = None) -> Token:
        if not self.at(kind, text):
            raise self.error(f"expected {what or repr(text)}")
        tok = self.tok
        self.pos += 1
        return tok

    def ident(self) -> str:
        return self.expect("ident", what="identifier").text

    def parse(self) -> Term:
        term = self.term()
        if not self.at("eof"):
            raise self.error("expected end of input")
        return term

    def term(self) -> Term:
        if self.at("kw", "let"):
            self.pos += 1
            self.expect("kw", "rec")
            name = self.ident()
            self.expect("sym", "=")
            bound = self.term()
            self.expect("kw", "in")
            return LetRec(name, bound, self.term())
        if self.at("kw", "fun"):
            self.pos += 1
            param = self.ident()
            self.expect("sym", "->")
            return Lam(param, self.term())
        return self.ext()

    def ext(self) -> Term:
        term = self.app()
        while self.at("kw", "with"):
            self.pos += 1
            self.expect("sym", "{")
            label = self.ident()
            self.expect("sym", "=")
            value = self.term()
            self.expect("sym", "}")
            term = Extend(term, label, value)
        return term

    def starts_atom(self) -> bool:
        tok = self.tok
        return tok.kind in ("int", "ident") or (tok.kind == "sym" and tok.text in "({")

    def app(self) -> Term:
        if not self.starts_atom():
            raise self.error("expected a term")
        term = self.atom()
        while self.starts_atom():
            term = App(term, self.atom())
        return term

    def atom(self) -> Term:
        term = self.prim()
        while self.at("sym", "."):
            self.pos += 1
            term = Proj(term, self.ident())
        return term

    def prim(self) -> Term:
        tok = self.tok
        if tok.kind == "int":
            self.pos += 1
            return IntLit(int(tok.text))
        if tok.kind == "ident":
            self.pos += 1
            return Var(tok.text)
        if self.at("sym", "("):
            self.pos += 1
            term = self.term()
            self.expect("sym", ")")
            return term
        if self.at("sym", "{"):
            return self.record()
        raise self.error("expected a term")

    def record(self) -> Record:
        self.expect("sym", "{")
        fields: list[tuple[str, Term]] = []
        seen: set[str] = set()
        if not self.at("sym", "}"):
            while True:
                tok = self.tok
                label = self.ident()
                if label in seen:
                    raise DuplicateLabel(
                        f"duplicate label {label!r} in record", tok.line, tok.column
                    )
                seen.add(label)
                self.expect("sym", "=")
                fields.append((label, self.term()))
                if not self.at("sym", ","):
                    break
                self.pos += 1
        self.expect("sym", "}")
        return Record(tuple(fields))


def parse(source: str) -> Term:
    """Parse one term from ``source``.

    Raises :class:`ParseError` (or its subclass :class:`DuplicateLabel`).
    """
    return _Parser(source).parse()


# ---------------------------------------------------------------------------
# printer

# precedence levels, loosest first
_TERM, _EXT, _APP, _ATOM = range(4)


def _prec(t: Term) -> int:
    if isinstance(t, (Lam, LetRec)):
        return _TERM
    if isinstance(t, Extend):
        return _EXT
    if isinstance(t, App):
        return _APP
    return _ATOM


def _show(t: Term, ctx: int) -> str:
    if isinstance(t, IntLit):
        s = str(t.value)
    elif isinstance(t, Var):
        s = t.name
    elif isinstance(t, Lam):
        s = f"fun {t.param} -> {_show(t.body, _TERM)}"
    elif isinstance(t, LetRec):
        s = f"let rec {t.name} = {_show(t.bound, _TERM)} in {_show(t.body, _TERM)}"
    elif isinstance(t, App):
        s = f"{_show(t.fn, _APP)} {_show(t.arg, _ATOM)}"
    elif isinstance(t, Extend):
        s = f"{_show(t.subject, _EXT)} with {{{t.label} = {_show(t.value, _TERM)}}}"
    elif isinstance(t, Proj):
        s = f"{_show(t.subject, _ATOM)}.{t.label}"
    elif isinstance(t, Record):
        s = "{" + ", ".join(f"{l} = {_show(v, _TERM)}" for l, v in t.fields) + "}"
    else:
        raise TypeError(f"not a term: {t!r}")
    return f"({s})" if _prec(t) < ctx else s


def print_term(t: Term) -> str:
    """Render ``t`` in canonical concrete syntax; ``parse`` inverts it."""
    return _show(t, _TERM)


def free_vars(t: Term) -> frozenset[str]:
    if isinstance(t, IntLit):
        return frozenset()
    if isinstance(t, Var):
        return frozenset({t.name})
    if isinstance(t, Lam):
        return free_vars(t.body) - {t.param}
    if isinstance(t, App):
        return free_vars(t.fn) | free_vars(t.arg)
    if isinstance(t, Record):
        return frozenset().union(*(free_vars(v) for _, v in t.fields))
    if isinstance(t, Proj):
        return free_vars(t.subject)
    if isinstance(t, LetRec):
        return (free_vars(t.bound) | free_vars(t.body)) - {t.name}
    if isinstance(t, Extend):
        return free_vars(t.subject) | free_vars(t.value)
    raise TypeError(f"not a term: {t!r}")
