"""Coalescing bounded inference types into compact output types, and printing.

Output types carry no bounds.  Type variables turn into unions (positive
positions) or intersections (negative positions) with their bounds, cycles
become ``mu`` binders, and afterwards type variables that only ever occur with
one polarity are dropped.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Union

from .core import (
    AbsField,
    Field,
    FieldVariable,
    FunType,
    IntType,
    Pre,
    RecType,
    Row,
    RowEmpty,
    RowVariable,
    SimpleType,
    TypeVariable,
    normalize_row,
)

__all__ = [
    "OInt",
    "OFun",
    "ORec",
    "OVar",
    "OTop",
    "OBot",
    "OUnion",
    "OInter",
    "OMu",
    "OutputType",
    "OPre",
    "OAbs",
    "OFieldVar",
    "OutputField",
    "union",
    "inter",
    "coalesce",
    "raw_type",
    "raw_field",
    "Namer",
    "print_type",
    "print_field",
]

log = logging.getLogger(__name__)

# Variable keys are (kind, number): kind "t" for inferred type variables,
# "mu" for recursion binders, "r" for row variables and "f" for field variables.
Key = tuple[str, int]


@dataclass(frozen=True)
class OInt:
    pass


@dataclass(frozen=True)
class OFun:
    domain: OutputType
    codomain: OutputType


@dataclass(frozen=True)
class ORec:
    fields: tuple[tuple[str, OutputField], ...]
    tail: Optional[Key] = None  # None means closed


@dataclass(frozen=True)
class OVar:
    key: Key


@dataclass(frozen=True)
class OTop:
    pass


@dataclass(frozen=True)
class OBot:
    pass


@dataclass(frozen=True)
class OUnion:
    members: tuple[OutputType, ...]


@dataclass(frozen=True)
class OInter:
    members: tuple[OutputType, ...]


@dataclass(frozen=True)
class OMu:
    key: Key
    body: OutputType


OutputType = Union[OInt, OFun, ORec, OVar, OTop, OBot, OUnion, OInter, OMu]


@dataclass(frozen=True)
class OPre:
    type: OutputType


@dataclass(frozen=True)
class OAbs:
    pass


@dataclass(frozen=True)
class OFieldVar:
    key: Key


OutputField = Union[OPre, OAbs, OFieldVar]


def _combine(items: Iterable[OutputType], node, unit, zero) -> OutputType:
    flat: list[OutputType] = []
    for item in items:
        parts = item.members if isinstance(item, node) else (item,)
        for p in parts:
            if isinstance(p, zero):
                return zero()
            if not isinstance(p, unit) and p not in flat:
                flat.append(p)
    if not flat:
        return unit()
    if len(flat) == 1:
        return flat[0]
    return node(tuple(flat))


def union(items: Iterable[OutputType]) -> OutputType:
    """Flattened, duplicate-free join; ``bot`` is the unit and ``top`` absorbs."""
    return _combine(items, OUnion, OBot, OTop)


def inter(items: Iterable[OutputType]) -> OutputType:
    return _combine(items, OInter, OTop, OBot)


# ---------------------------------------------------------------------------
# raw conversion (no bounds consulted), used for traces and error messages


def raw_type(t: SimpleType) -> OutputType:
    if isinstance(t, IntType):
        return OInt()
    if isinstance(t, FunType):
        return OFun(raw_type(t.domain), raw_type(t.codomain))
    if isinstance(t, RecType):
        fields, tail = normalize_row(t.row)
        out = tuple(sorted((l, raw_field(f)) for l, f in fields.items()))
        return ORec(out, ("r", tail.id) if isinstance(tail, RowVariable) else None)
    if isinstance(t, TypeVariable):
        return OVar(("t", t.id))
    raise TypeError(f"not a type: {t!r}")


def raw_field(f: Field) -> OutputField:
    if isinstance(f, Pre):
        return OPre(raw_type(f.type))
    if isinstance(f, FieldVariable):
        return OFieldVar(("f", f.id))
    return OAbs()


# ---------------------------------------------------------------------------
# coalescing

_RowParts = tuple[dict[str, OutputField], Optional[Key]]


class _Coalescer:
    def __init__(self):
        self.recursive: dict[tuple[TypeVariable, bool], OVar] = {}
        self.mu_ids = itertools.count()
        self.diagnostics: list[str] = []

    def note(self, message: str):
        log.debug(message)
        self.diagnostics.append(message)

    def type(self, t: SimpleType, pol: bool, in_process: frozenset) -> OutputType:
        if isinstance(t, IntType):
            return OInt()
        if isinstance(t, FunType):
            return OFun(
                self.type(t.domain, not pol, in_process),
                self.type(t.codomain, pol, in_process),
            )
        if isinstance(t, RecType):
            fields, tail = self.row(t.row, pol, in_process)
            return _make_record(fields, tail)
        if isinstance(t, TypeVariable):
            key = (t, pol)
            if key in in_process:
                if key not in self.recursive:
                    self.recursive[key] = OVar(("mu", next(self.mu_ids)))
                return self.recursive[key]
            inner = in_process | {key}
            bounds = t.lower_bounds if pol else t.upper_bounds
            parts = [OVar(("t", t.id))] + [self.type(b, pol, inner) for b in bounds]
            res = union(parts) if pol else inter(parts)
            rec = self.recursive.get(key)
            return OMu(rec.key, res) if rec is not None else res
        raise TypeError(f"not a type: {t!r}")

    def row(self, r: Row, pol: bool, in_process: frozenset) -> _RowParts:
        fields, tail = normalize_row(r)
        out = {l: self.field(f, pol, in_process) for l, f in fields.items()}
        if isinstance(tail, RowEmpty):
            return out, None
        extra, tail_key = self.row_var(tail, pol, in_process)
        for label, f in extra.items():
            out.setdefault(label, f)
        return out, tail_key

    def row_var(self, v: RowVariable, pol: bool, in_process: frozenset) -> _RowParts:
        key = (v, pol)
        acc: _RowParts = ({}, ("r", v.id))
        if key in in_process:
            return acc
        inner = in_process | {key}
        for b in v.lower_bounds if pol else v.upper_bounds:
            parts = self.row(b, pol, inner)
            acc = self.row_join(acc, parts) if pol else self.row_meet(acc, parts)
        return acc

    def pick_tail(self, ta: Key, tb: Key, op: str) -> Key:
        # Rows have no union/intersection of tails.  Linked row variables
        # reach each other through their bounds, so choosing the oldest one
        # names a whole linked group consistently across polarities.
        if ta == tb:
            return ta
        keep = min(ta, tb, key=lambda k: k[1])
        self.note(f"row {op} of distinct tails {ta} and {tb}; keeping {keep}")
        return keep

    def row_join(self, a: _RowParts, b: _RowParts) -> _RowParts:
        (fa, ta), (fb, tb) = a, b
        if ta is None or tb is None:
            tail = None
        else:
            tail = self.pick_tail(ta, tb, "join")
        fields = {}
        for label in list(fa) + [l for l in fb if l not in fa]:
            x = fa.get(label, OAbs() if ta is None else None)
            y = fb.get(label, OAbs() if tb is None else None)
            fields[label] = self.field_join(x, y) if x and y else (x or y)
        return fields, tail

    def row_meet(self, a: _RowParts, b: _RowParts) -> _RowParts:
        (fa, ta), (fb, tb) = a, b
        if ta is None or tb is None:
            tail = tb if ta is None else ta
        else:
            tail = self.pick_tail(ta, tb, "meet")
        fields = {}
        for label in list(fa) + [l for l in fb if l not in fa]:
            x, y = fa.get(label), fb.get(label)
            fields[label] = self.field_meet(x, y) if x and y else (x or y)
        return fields, tail

    def field(self, f: Field, pol: bool, in_process: frozenset) -> OutputField:
        if isinstance(f, Pre):
            return OPre(self.type(f.type, pol, in_process))
        if isinstance(f, AbsField):
            return OAbs()
        key = (f, pol)
        bounds = f.lower_bounds if pol else f.upper_bounds
        if key in in_process or not bounds:
            return OFieldVar(("f", f.id))
        inner = in_process | {key}
        parts = [self.field(b, pol, inner) for b in bounds]
        acc = parts[0]
        for p in parts[1:]:
            acc = self.field_join(acc, p) if pol else self.field_meet(acc, p)
        return acc

    def field_join(self, a: OutputField, b: OutputField) -> OutputField:
        if isinstance(a, OAbs) or isinstance(b, OAbs):
            return OAbs()
        if isinstance(a, OPre) and isinstance(b, OPre):
            return OPre(union([a.type, b.type]))
        if a != b:
            self.note(f"field join of {a} and {b}; keeping {a}")
        return a

    def field_meet(self, a: OutputField, b: OutputField) -> OutputField:
        if isinstance(a, OAbs):
            return b
        if isinstance(b, OAbs):
            return a
        if isinstance(a, OPre) and isinstance(b, OPre):
            return OPre(inter([a.type, b.type]))
        if a != b:
            self.note(f"field meet of {a} and {b}; keeping {a}")
        return a


def _make_record(fields: dict[str, OutputField], tail: Optional[Key]) -> ORec:
    items = fields.items()
    if tail is None:
        # Abs fields of a closed record are implied by the closed tail
        items = ((l, f) for l, f in items if not isinstance(f, OAbs))
    return ORec(tuple(sorted(items)), tail)


# ---------------------------------------------------------------------------
# polar-variable elimination


def _collect_polarities(t: OutputType, pol: bool, acc: dict[Key, set[bool]]):
    if isinstance(t, OVar):
        acc.setdefault(t.key, set()).add(pol)
    elif isinstance(t, OFun):
        _collect_polarities(t.domain, not pol, acc)
        _collect_polarities(t.codomain, pol, acc)
    elif isinstance(t, ORec):
        for _, f in t.fields:
            if isinstance(f, OPre):
                _collect_polarities(f.type, pol, acc)
    elif isinstance(t, (OUnion, OInter)):
        for m in t.members:
            _collect_polarities(m, pol, acc)
    elif isinstance(t, OMu):
        _collect_polarities(t.body, pol, acc)


def _mentions(t: OutputType, key: Key) -> bool:
    if isinstance(t, OVar):
        return t.key == key
    if isinstance(t, OFun):
        return _mentions(t.domain, key) or _mentions(t.codomain, key)
    if isinstance(t, ORec):
        return any(isinstance(f, OPre) and _mentions(f.type, key) for _, f in t.fields)
    if isinstance(t, (OUnion, OInter)):
        return any(_mentions(m, key) for m in t.members)
    if isinstance(t, OMu):
        return _mentions(t.body, key)
    return False


def _drop(t: OutputType, doomed: dict[Key, bool]) -> OutputType:
    if isinstance(t, OVar):
        if t.key in doomed:
            return OBot() if doomed[t.key] else OTop()
        return t
    if isinstance(t, OFun):
        return OFun(_drop(t.domain, doomed), _drop(t.codomain, doomed))
    if isinstance(t, ORec):
        fields = tuple(
            (l, OPre(_drop(f.type, doomed)) if isinstance(f, OPre) else f)
            for l, f in t.fields
        )
        return ORec(fields, t.tail)
    if isinstance(t, OUnion):
        return union(_drop(m, doomed) for m in t.members)
    if isinstance(t, OInter):
        return inter(_drop(m, doomed) for m in t.members)
    if isinstance(t, OMu):
        body = _drop(t.body, doomed)
        return OMu(t.key, body) if _mentions(body, t.key) else body
    return t


def eliminate_polar_variables(t: OutputType, pol: bool = True) -> OutputType:
    """Remove type variables that occur with a single polarity."""
    seen: dict[Key, set[bool]] = {}
    _collect_polarities(t, pol, seen)
    doomed = {
        key: next(iter(pols))
        for key, pols in seen.items()
        if key[0] == "t" and len(pols) == 1
    }
    return _drop(t, doomed) if doomed else t


def coalesce(
    t: SimpleType,
    polarity: bool = True,
    eliminate: bool = True,
    diagnostics: Optional[list[str]] = None,
) -> OutputType:
    """Turn an inferred type into an output type.

    ``polarity`` is True for positive (output) positions.  Non-fatal
    imprecisions (such as joining rows with two different open tails) are
    appended to ``diagnostics`` when a list is given.
    """
    c = _Coalescer()
    out = c.type(t, polarity, frozenset())
    if eliminate:
        out = eliminate_polar_variables(out, polarity)
    if diagnostics is not None:
        diagnostics.extend(c.diagnostics)
    return out


# ---------------------------------------------------------------------------
# printing


def _letters(n: int) -> str:
    s = ""
    n += 1
    while n:
        n, r = divmod(n - 1, 26)
        s = chr(ord("a") + r) + s
    return s


class Namer:
    """Assigns printable names to variable keys in first-occurrence order.

    Type variables get letters only ('a .. 'z, 'aa ..) so they can never
    collide with row ('r0) or field ('f0) names.
    """

    def __init__(self):
        self.names: dict[Key, str] = {}
        self.counts = {"t": 0, "r": 0, "f": 0}

    def __call__(self, key: Key) -> str:
        name = self.names.get(key)
        if name is None:
            kind = "t" if key[0] in ("t", "mu") else key[0]
            n = self.counts[kind]
            self.counts[kind] += 1
            name = "'" + (_letters(n) if kind == "t" else f"{kind}{n}")
            self.names[key] = name
        return name


# precedence, loosest first
_MU, _ARROW, _UNION, _INTER, _ATOM = range(5)


def _prec(t: OutputType) -> int:
    if isinstance(t, OMu):
        return _MU
    if isinstance(t, OFun):
        return _ARROW
    if isinstance(t, OUnion):
        return _UNION
    if isinstance(t, OInter):
        return _INTER
    return _ATOM


def _show(t: OutputType, ctx: int, name: Namer) -> str:
    if isinstance(t, OInt):
        s = "int"
    elif isinstance(t, OTop):
        s = "top"
    elif isinstance(t, OBot):
        s = "bot"
    elif isinstance(t, OVar):
        s = name(t.key)
    elif isinstance(t, OFun):
        s = f"{_show(t.domain, _UNION, name)} -> {_show(t.codomain, _ARROW, name)}"
    elif isinstance(t, OUnion):
        s = " \\/ ".join(_show(m, _INTER, name) for m in t.members)
    elif isinstance(t, OInter):
        s = " /\\ ".join(_show(m, _ATOM, name) for m in t.members)
    elif isinstance(t, OMu):
        binder = name(t.key)
        s = f"mu {binder}. {_show(t.body, _MU, name)}"
    elif isinstance(t, ORec):
        fields = ", ".join(f"{l}: {_show_field(f, name)}" for l, f in t.fields)
        if t.tail is None:
            s = "{" + fields + "}"
        elif fields:
            s = "{" + fields + " ; " + name(t.tail) + "}"
        else:
            s = "{" + name(t.tail) + "}"
    else:
        raise TypeError(f"not an output type: {t!r}")
    return f"({s})" if _prec(t) < ctx else s


def _show_field(f: OutputField, name: Namer) -> str:
    if isinstance(f, OPre):
        return _show(f.type, _MU, name)
    if isinstance(f, OFieldVar):
        return name(f.key)
    return "abs"


def print_type(t: OutputType, namer: Optional[Namer] = None) -> str:
    return _show(t, _MU, namer or Namer())


def print_field(f: OutputField, namer: Optional[Namer] = None) -> str:
    """Print a standalone field; ``Pre`` is left implicit."""
    return _show_field(f, namer or Namer())
