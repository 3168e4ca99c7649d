"""Inference-time types.

Structural types, rows and fields are immutable; the three variable kinds are
mutable cells that accumulate bounds while constraints are solved.  Row
variables may additionally be *expanded* exactly once into
``label: field_var ; rest_var``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Union

__all__ = [
    "IntType",
    "INT",
    "FunType",
    "RecType",
    "TypeVariable",
    "SimpleType",
    "RowCons",
    "RowEmpty",
    "ROW_EMPTY",
    "RowVariable",
    "Row",
    "Pre",
    "AbsField",
    "ABS",
    "FieldVariable",
    "Field",
    "Scheme",
    "VarSupply",
    "normalize_row",
    "build_row",
    "level_of",
    "row_level",
    "field_level",
]


@dataclass(frozen=True)
class IntType:
    def __repr__(self):
        return "int"


INT = IntType()


@dataclass(frozen=True)
class FunType:
    domain: SimpleType
    codomain: SimpleType


@dataclass(frozen=True)
class RecType:
    row: Row


class TypeVariable:
    __slots__ = ("id", "level", "lower_bounds", "upper_bounds")

    def __init__(self, id: int, level: int):
        self.id = id
        self.level = level
        self.lower_bounds: list[SimpleType] = []
        self.upper_bounds: list[SimpleType] = []

    def __repr__(self):
        return f"α{self.id}"


SimpleType = Union[IntType, FunType, RecType, TypeVariable]


@dataclass(frozen=True)
class RowCons:
    label: str
    field: Field
    rest: Row


@dataclass(frozen=True)
class RowEmpty:
    """The closed row: every remaining label is absent."""

    def __repr__(self):
        return "Abs"


ROW_EMPTY = RowEmpty()


class RowVariable:
    __slots__ = ("id", "level", "lower_bounds", "upper_bounds", "expansion")

    def __init__(self, id: int, level: int):
        self.id = id
        self.level = level
        self.lower_bounds: list[Row] = []
        self.upper_bounds: list[Row] = []
        self.expansion: Optional[tuple[str, FieldVariable, RowVariable]] = None

    def __repr__(self):
        return f"ρ{self.id}"


Row = Union[RowCons, RowEmpty, RowVariable]


@dataclass(frozen=True)
class Pre:
    type: SimpleType


@dataclass(frozen=True)
class AbsField:
    def __repr__(self):
        return "Abs"


ABS = AbsField()


class FieldVariable:
    # ``label`` only feeds error messages: the label this field was created for
    __slots__ = ("id", "level", "lower_bounds", "upper_bounds", "label")

    def __init__(self, id: int, level: int, label: Optional[str] = None):
        self.id = id
        self.level = level
        self.lower_bounds: list[Field] = []
        self.upper_bounds: list[Field] = []
        self.label = label

    def __repr__(self):
        return f"θ{self.id}"


Field = Union[Pre, AbsField, FieldVariable]


@dataclass(frozen=True)
class Scheme:
    """A let-bound type; variables above ``level`` are generic."""

    body: SimpleType
    level: int


class VarSupply:
    """Allocates variables of all three kinds from one id counter."""

    def __init__(self):
        self._ids = itertools.count()

    def type_var(self, level: int) -> TypeVariable:
        return TypeVariable(next(self._ids), level)

    def row_var(self, level: int) -> RowVariable:
        return RowVariable(next(self._ids), level)

    def field_var(self, level: int, label: Optional[str] = None) -> FieldVariable:
        return FieldVariable(next(self._ids), level, label)

    def fresh(self, kind: str, level: int):
        if level < 0:
            raise ValueError("level must be non-negative")
        if kind == "type":
            return self.type_var(level)
        if kind == "row":
            return self.row_var(level)
        if kind == "field":
            return self.field_var(level)
        raise ValueError(f"unknown variable kind {kind!r}")


def normalize_row(row: Row) -> tuple[dict[str, Field], Union[RowEmpty, RowVariable]]:
    """Flatten ``row`` into a label->field mapping and an unexpanded tail.

    Expansions are followed transitively.  When a label repeats along the
    spine the outermost field wins.
    """
    fields: dict[str, Field] = {}
    while True:
        if isinstance(row, RowCons):
            fields.setdefault(row.label, row.field)
            row = row.rest
        elif isinstance(row, RowVariable) and row.expansion is not None:
            label, field, row = row.expansion
            fields.setdefault(label, field)
        else:
            return fields, row


def build_row(fields: dict[str, Field], tail: Row) -> Row:
    row = tail
    for label in sorted(fields, reverse=True):
        row = RowCons(label, fields[label], row)
    return row


def level_of(t: SimpleType) -> int:
    if isinstance(t, TypeVariable):
        return t.level
    if isinstance(t, FunType):
        return max(level_of(t.domain), level_of(t.codomain))
    if isinstance(t, RecType):
        return row_level(t.row)
    return 0


def row_level(r: Row) -> int:
    fields, tail = normalize_row(r)
    lvl = tail.level if isinstance(tail, RowVariable) else 0
    for f in fields.values():
        lvl = max(lvl, field_level(f))
    return lvl


def field_level(f: Field) -> int:
    if isinstance(f, Pre):
        return level_of(f.type)
    if isinstance(f, FieldVariable):
        return f.level
    return 0
