"""Variable-free types and a direct decision procedure for subtyping on them.

This is deliberately written without any reference to the inference engine so
that it can serve as an independent check of the constraint solver.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Union

from .core import ABS, INT, FunType, Pre, RecType, ROW_EMPTY, RowCons

__all__ = [
    "GInt",
    "GFun",
    "GRec",
    "GPre",
    "GAbs",
    "GroundType",
    "GroundField",
    "ground_subtype",
    "enumerate_ground_types",
    "embed",
]


@dataclass(frozen=True)
class GInt:
    pass


@dataclass(frozen=True)
class GFun:
    domain: GroundType
    codomain: GroundType


@dataclass(frozen=True)
class GRec:
    """Closed record; labels not listed are absent."""

    fields: tuple[tuple[str, GroundField], ...] = ()

    def field(self, label: str) -> GroundField:
        for l, f in self.fields:
            if l == label:
                return f
        return GAbs()


@dataclass(frozen=True)
class GPre:
    type: GroundType


@dataclass(frozen=True)
class GAbs:
    pass


GroundType = Union[GInt, GFun, GRec]
GroundField = Union[GPre, GAbs]


def _field_sub(a: GroundField, b: GroundField) -> bool:
    if isinstance(b, GAbs):
        return True
    if isinstance(a, GAbs):
        return False
    return ground_subtype(a.type, b.type)


def ground_subtype(a: GroundType, b: GroundType) -> bool:
    if isinstance(a, GInt) and isinstance(b, GInt):
        return True
    if isinstance(a, GFun) and isinstance(b, GFun):
        return ground_subtype(b.domain, a.domain) and ground_subtype(a.codomain, b.codomain)
    if isinstance(a, GRec) and isinstance(b, GRec):
        labels = {l for l, _ in a.fields} | {l for l, _ in b.fields}
        return all(_field_sub(a.field(l), b.field(l)) for l in labels)
    return False


def enumerate_ground_types(max_depth: int, labels: Iterable[str]) -> list[GroundType]:
    """All ground types of depth <= ``max_depth`` over ``labels``.

    Depth 0 holds ``int`` and the empty record.  A record may omit a label,
    mark it ``Abs`` or give it a present field of smaller depth; the omitted
    and explicitly absent forms are kept as distinct values.
    """
    if max_depth < 0:
        raise ValueError("max_depth must be non-negative")
    labels = sorted(set(labels))
    level = [GInt(), GRec()]
    for _ in range(max_depth):
        smaller = level
        funs = [GFun(d, c) for d in smaller for c in smaller]
        options: list[list] = [[None, GAbs()] + [GPre(t) for t in smaller]]
        recs = []
        for choice in itertools.product(*(options * len(labels))):
            recs.append(
                GRec(tuple((l, f) for l, f in zip(labels, choice) if f is not None))
            )
        level = [GInt()] + funs + recs
    return level


def embed(t: GroundType):
    """The inference-time type denoting ``t``."""
    if isinstance(t, GInt):
        return INT
    if isinstance(t, GFun):
        return FunType(embed(t.domain), embed(t.codomain))
    row = ROW_EMPTY
    for label, f in reversed(t.fields):
        row = RowCons(label, Pre(embed(f.type)) if isinstance(f, GPre) else ABS, row)
    return RecType(row)
