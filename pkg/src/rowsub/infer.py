"""Type inference and subtype constraint solving with row expansion."""

from __future__ import annotations

import contextlib
from typing import Callable, Mapping, Optional, Union

from . import syntax as s
from .coalesce import Namer, coalesce, print_field, print_type, raw_field, raw_type
from .core import (
    ABS,
    INT,
    AbsField,
    Field,
    FieldVariable,
    FunType,
    IntType,
    Pre,
    RecType,
    Row,
    RowCons,
    RowEmpty,
    RowVariable,
    Scheme,
    SimpleType,
    TypeVariable,
    VarSupply,
    build_row,
    field_level,
    level_of,
    normalize_row,
    row_level,
)
from .trace import TraceEvent

__all__ = [
    "TypingError",
    "NotASubtype",
    "MissingField",
    "UnboundVariable",
    "TypeEnv",
    "Engine",
    "infer",
]

TypeEnv = Mapping[str, Union[SimpleType, Scheme]]


class TypingError(Exception):
    kind = "TypeError"

    def __str__(self):
        return self.message()

    def message(self) -> str:
        raise NotImplementedError


class NotASubtype(TypingError):
    kind = "NotASubtype"

    def __init__(self, lhs, rhs):
        super().__init__(lhs, rhs)
        self.lhs = lhs
        self.rhs = rhs

    def message(self):
        namer = Namer()
        return (
            f"cannot constrain {_render(self.lhs, namer)} <= {_render(self.rhs, namer)}"
        )


class MissingField(TypingError):
    kind = "MissingField"

    def __init__(self, label: Optional[str]):
        super().__init__(label)
        self.label = label
        self.rows: Optional[tuple[Row, Row]] = None

    def message(self):
        msg = f"missing field {self.label}"
        if self.rows is not None:
            namer = Namer()
            lhs, rhs = (print_type(raw_type(RecType(r)), namer) for r in self.rows)
            msg += f": {lhs} is not a subtype of {rhs}"
        return msg


class UnboundVariable(TypingError):
    kind = "UnboundVariable"

    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def message(self):
        return f"unbound variable {self.name}"


def _render(x, namer: Namer) -> str:
    if isinstance(x, (Pre, AbsField, FieldVariable)):
        return print_field(raw_field(x), namer)
    return print_type(raw_type(x), namer)


class Engine:
    """One inference session.

    All variables and their bounds live in the engine; an instance is not
    shared between threads.  ``trace`` receives :class:`TraceEvent` objects
    as inference proceeds.
    """

    def __init__(self, trace: Optional[Callable[[TraceEvent], None]] = None):
        self.supply = VarSupply()
        self._trace = trace
        self._depth = 0
        self._namer = Namer()
        self._cache: set = set()
        self._extruded: dict = {}

    # -- tracing -----------------------------------------------------------

    def _emit(self, kind: str, *args):
        self._trace(TraceEvent(self._depth, kind, tuple(args)))

    def _show(self, x) -> str:
        return _render(x, self._namer)

    @contextlib.contextmanager
    def _nested(self):
        self._depth += 1
        try:
            yield
        finally:
            self._depth -= 1

    # -- typing ------------------------------------------------------------

    def fresh_var(self, kind: str, level: int):
        """Fresh variable of ``kind`` ("type", "row" or "field")."""
        return self.supply.fresh(kind, level)

    def infer(self, term: s.Term, env: Optional[TypeEnv] = None) -> SimpleType:
        """Type a whole program at level 0.

        When tracing, the closing ``= <type>`` line shows the coalesced type.
        """
        t = self.type_term(term, dict(env or {}), 0, _root=True)
        if self._trace:
            self._emit("result", print_type(coalesce(t)))
        return t

    def type_term(self, t: s.Term, env: TypeEnv, lvl: int, _root: bool = False) -> SimpleType:
        if not self._trace:
            return self._type_term(t, env, lvl)
        self._emit("typeTerm", s.print_term(t))
        with self._nested():
            result = self._type_term(t, env, lvl)
        if not _root:
            self._emit("result", self._show(result))
        return result

    def _type_term(self, t: s.Term, env: TypeEnv, lvl: int) -> SimpleType:
        if isinstance(t, s.IntLit):
            return INT
        if isinstance(t, s.Var):
            try:
                entry = env[t.name]
            except KeyError:
                raise UnboundVariable(t.name) from None
            if isinstance(entry, Scheme):
                return self.instantiate(entry, lvl)
            return entry
        if isinstance(t, s.Lam):
            param = self.supply.type_var(lvl)
            body = self.type_term(t.body, {**env, t.param: param}, lvl)
            return FunType(param, body)
        if isinstance(t, s.App):
            fn = self.type_term(t.fn, env, lvl)
            arg = self.type_term(t.arg, env, lvl)
            res = self.supply.type_var(lvl)
            self.constrain(fn, FunType(arg, res))
            return res
        if isinstance(t, s.Record):
            fields = {l: Pre(self.type_term(v, env, lvl)) for l, v in t.fields}
            return RecType(build_row(fields, RowEmpty()))
        if isinstance(t, s.Proj):
            subject = self.type_term(t.subject, env, lvl)
            res = self.supply.type_var(lvl)
            rest = self.supply.row_var(lvl)
            self.constrain(subject, RecType(RowCons(t.label, Pre(res), rest)))
            return res
        if isinstance(t, s.Extend):
            subject = self.type_term(t.subject, env, lvl)
            old = self.supply.field_var(lvl, t.label)
            rest = self.supply.row_var(lvl)
            self.constrain(subject, RecType(RowCons(t.label, old, rest)))
            value = self.type_term(t.value, env, lvl)
            return RecType(RowCons(t.label, Pre(value), rest))
        if isinstance(t, s.LetRec):
            self_ty = self.supply.type_var(lvl + 1)
            bound = self.type_term(t.bound, {**env, t.name: self_ty}, lvl + 1)
            self.constrain(bound, self_ty)
            scheme = self.generalize(self_ty, lvl)
            return self.type_term(t.body, {**env, t.name: scheme}, lvl)
        raise TypeError(f"not a term: {t!r}")

    # -- let-polymorphism --------------------------------------------------

    def generalize(self, t: SimpleType, lvl: int) -> Scheme:
        return Scheme(t, lvl)

    def instantiate(self, scheme: Scheme, lvl: int) -> SimpleType:
        """Copy every variable above the scheme's level, bounds included."""
        lim = scheme.level
        copies: dict = {}

        def ty(t):
            if level_of(t) <= lim:
                return t
            if isinstance(t, FunType):
                return FunType(ty(t.domain), ty(t.codomain))
            if isinstance(t, RecType):
                return RecType(row(t.row))
            if t in copies:
                return copies[t]
            nv = copies[t] = self.supply.type_var(lvl)
            nv.lower_bounds = [ty(b) for b in t.lower_bounds]
            nv.upper_bounds = [ty(b) for b in t.upper_bounds]
            return nv

        def row(r):
            if row_level(r) <= lim:
                return r
            fields, tail = normalize_row(r)
            return build_row({l: field(f) for l, f in fields.items()}, row_var(tail))

        def row_var(v):
            if isinstance(v, RowEmpty) or v.level <= lim:
                return v
            if v in copies:
                return copies[v]
            nv = copies[v] = self.supply.row_var(lvl)
            nv.lower_bounds = [row(b) for b in v.lower_bounds]
            nv.upper_bounds = [row(b) for b in v.upper_bounds]
            return nv

        def field(f):
            if field_level(f) <= lim:
                return f
            if isinstance(f, Pre):
                return Pre(ty(f.type))
            if f in copies:
                return copies[f]
            nv = copies[f] = self.supply.field_var(lvl, f.label)
            nv.lower_bounds = [field(b) for b in f.lower_bounds]
            nv.upper_bounds = [field(b) for b in f.upper_bounds]
            return nv

        return ty(scheme.body)

    # -- extrusion ---------------------------------------------------------
    # A bound may not mention variables of a deeper level than the variable
    # it is attached to.  Such variables get a stand-in at the shallower
    # level, linked to the original and constrained against its bounds.
    # Stand-ins are memoized per (variable, polarity, level) for the whole
    # top-level constraint so that cyclic bounds terminate.

    def _stand_in(self, v, pol: bool, lvl: int, make, link):
        key = (v, pol, lvl)
        nv = self._extruded.get(key)
        if nv is None:
            nv = self._extruded[key] = make(lvl)
            if pol:
                v.upper_bounds.append(nv)
                for b in list(v.lower_bounds):
                    link(b, nv)
            else:
                v.lower_bounds.append(nv)
                for b in list(v.upper_bounds):
                    link(nv, b)
        return nv

    def _extrude(self, t: SimpleType, pol: bool, lvl: int) -> SimpleType:
        if level_of(t) <= lvl:
            return t
        if isinstance(t, FunType):
            return FunType(self._extrude(t.domain, not pol, lvl), self._extrude(t.codomain, pol, lvl))
        if isinstance(t, RecType):
            return RecType(self._extrude_row(t.row, pol, lvl))
        return self._stand_in(t, pol, lvl, self.supply.type_var, self._constrain)

    def _extrude_row(self, r: Row, pol: bool, lvl: int) -> Row:
        if row_level(r) <= lvl:
            return r
        fields, tail = normalize_row(r)
        out = {l: self._extrude_field(f, pol, lvl) for l, f in fields.items()}
        if isinstance(tail, RowVariable) and tail.level > lvl:
            tail = self._stand_in(tail, pol, lvl, self.supply.row_var, self._constrain_row)
        return build_row(out, tail)

    def _extrude_field(self, f: Field, pol: bool, lvl: int) -> Field:
        if field_level(f) <= lvl:
            return f
        if isinstance(f, Pre):
            return Pre(self._extrude(f.type, pol, lvl))
        return self._stand_in(
            f, pol, lvl,
            lambda level: self.supply.field_var(level, f.label),
            lambda a, b: self._constrain_field(a, b, f.label),
        )

    # -- constraint solving ------------------------------------------------

    def _reset(self):
        self._cache = set()
        self._extruded = {}

    def constrain(self, lhs: SimpleType, rhs: SimpleType):
        """Enforce ``lhs <= rhs``, raising :class:`TypingError` on failure.

        Each top-level call starts from an empty cache of visited pairs.
        """
        self._reset()
        self._constrain(lhs, rhs)

    def _constrain(self, lhs: SimpleType, rhs: SimpleType):
        if lhs is rhs:
            return
        if isinstance(lhs, TypeVariable) or isinstance(rhs, TypeVariable):
            key = (lhs, rhs)
            if key in self._cache:
                return
            self._cache.add(key)
        if self._trace:
            self._emit("constrain", self._show(lhs), self._show(rhs))
            with self._nested():
                self._constrain_step(lhs, rhs)
        else:
            self._constrain_step(lhs, rhs)

    def _constrain_step(self, lhs: SimpleType, rhs: SimpleType):
        if isinstance(lhs, IntType) and isinstance(rhs, IntType):
            return
        if isinstance(lhs, FunType) and isinstance(rhs, FunType):
            self._constrain(rhs.domain, lhs.domain)
            self._constrain(lhs.codomain, rhs.codomain)
        elif isinstance(lhs, RecType) and isinstance(rhs, RecType):
            self._constrain_row(lhs.row, rhs.row)
        elif isinstance(lhs, TypeVariable) and level_of(rhs) <= lhs.level:
            lhs.upper_bounds.append(rhs)
            for b in list(lhs.lower_bounds):
                self._constrain(b, rhs)
        elif isinstance(rhs, TypeVariable) and level_of(lhs) <= rhs.level:
            rhs.lower_bounds.append(lhs)
            for b in list(rhs.upper_bounds):
                self._constrain(lhs, b)
        elif isinstance(lhs, TypeVariable):
            self._constrain(lhs, self._extrude(rhs, False, lhs.level))
        elif isinstance(rhs, TypeVariable):
            self._constrain(self._extrude(lhs, True, rhs.level), rhs)
        else:
            raise NotASubtype(lhs, rhs)

    def constrain_row(self, r1: Row, r2: Row):
        self._reset()
        self._constrain_row(r1, r2)

    def _constrain_row(self, r1: Row, r2: Row):
        if r1 is r2:
            return
        if isinstance(r1, RowVariable) or isinstance(r2, RowVariable):
            key = (r1, r2)
            if key in self._cache:
                return
            self._cache.add(key)

        # make both sides mention the same labels, expanding open tails
        expanded = False
        while True:
            f1, t1 = normalize_row(r1)
            f2, t2 = normalize_row(r2)
            if isinstance(t1, RowVariable):
                missing = next((l for l in f2 if l not in f1), None)
                if missing is not None:
                    self.expand(t1, missing)
                    expanded = True
                    continue
            if isinstance(t2, RowVariable):
                missing = next((l for l in f1 if l not in f2), None)
                if missing is not None:
                    self.expand(t2, missing)
                    expanded = True
                    continue
            break

        if expanded and self._trace:
            self._emit("constrain", self._show(RecType(r1)), self._show(RecType(r2)))
            with self._nested():
                self._constrain_fields(r1, r2, f1, t1, f2, t2)
        else:
            self._constrain_fields(r1, r2, f1, t1, f2, t2)

    def _constrain_fields(self, r1, r2, f1, t1, f2, t2):
        for label in list(f1) + [l for l in f2 if l not in f1]:
            # a label still missing here sits on a closed side: Abs unfolding
            try:
                self._constrain_field(f1.get(label, ABS), f2.get(label, ABS), label)
            except MissingField as e:
                if e.rows is None:
                    e.rows = (r1, r2)
                raise
        self._constrain_tail(t1, t2)

    def _constrain_tail(self, t1: Row, t2: Row):
        if t1 is t2:
            return
        # field constraints above may have expanded a tail in the meantime
        if (isinstance(t1, RowVariable) and t1.expansion is not None) or (
            isinstance(t2, RowVariable) and t2.expansion is not None
        ):
            self._constrain_row(t1, t2)
            return
        if isinstance(t1, RowEmpty) and isinstance(t2, RowEmpty):
            return
        if isinstance(t1, RowVariable) and isinstance(t2, RowVariable):
            # record the link on both sides where levels allow, so that an
            # expansion of either variable is replayed on the other
            if t2.level <= t1.level:
                t1.upper_bounds.append(t2)
                for b in list(t1.lower_bounds):
                    self._constrain_row(b, t2)
            if t1.level <= t2.level:
                t2.lower_bounds.append(t1)
                for b in list(t2.upper_bounds):
                    self._constrain_row(t1, b)
            return
        if isinstance(t1, RowVariable) and row_level(t2) <= t1.level:
            t1.upper_bounds.append(t2)
            for b in list(t1.lower_bounds):
                self._constrain_row(b, t2)
        elif isinstance(t2, RowVariable) and row_level(t1) <= t2.level:
            t2.lower_bounds.append(t1)
            for b in list(t2.upper_bounds):
                self._constrain_row(t1, b)
        elif isinstance(t1, RowVariable):
            self._constrain_row(t1, self._extrude_row(t2, False, t1.level))
        else:
            self._constrain_row(self._extrude_row(t1, True, t2.level), t2)

    def constrain_field(self, f1: Field, f2: Field, label: Optional[str] = None):
        self._reset()
        self._constrain_field(f1, f2, label)

    def _constrain_field(self, f1: Field, f2: Field, label: Optional[str]):
        if f1 is f2:
            return
        if isinstance(f1, Pre) and isinstance(f2, Pre):
            self._constrain(f1.type, f2.type)
            return
        if isinstance(f1, FieldVariable) or isinstance(f2, FieldVariable):
            key = (f1, f2)
            if key in self._cache:
                return
            self._cache.add(key)
        if self._trace:
            self._emit("constrain", self._show(f1), self._show(f2))
            with self._nested():
                self._constrain_field_step(f1, f2, label)
        else:
            self._constrain_field_step(f1, f2, label)

    def _constrain_field_step(self, f1: Field, f2: Field, label: Optional[str]):
        if isinstance(f2, AbsField):
            return
        if isinstance(f1, AbsField) and isinstance(f2, Pre):
            raise MissingField(label)
        if isinstance(f1, FieldVariable) and field_level(f2) <= f1.level:
            f1.upper_bounds.append(f2)
            for b in list(f1.lower_bounds):
                self._constrain_field(b, f2, label or f1.label)
        elif isinstance(f2, FieldVariable) and field_level(f1) <= f2.level:
            f2.lower_bounds.append(f1)
            for b in list(f2.upper_bounds):
                self._constrain_field(f1, b, label or f2.label)
        elif isinstance(f1, FieldVariable):
            self._constrain_field(f1, self._extrude_field(f2, False, f1.level), label)
        else:
            self._constrain_field(self._extrude_field(f1, True, f2.level), f2, label)

    def expand(self, v: RowVariable, label: str) -> tuple[Field, RowVariable]:
        """Give row variable ``v`` an explicit field for ``label``.

        Follows existing expansions; on the unexpanded tail it records
        ``label: field_var ; rest_var`` once and for all, then re-checks the
        tail's bounds against that view.
        """
        fields, tail = normalize_row(v)
        if label in fields:
            return fields[label], _tail_after(v, label)
        if not isinstance(tail, RowVariable):
            raise ValueError(f"cannot expand a closed row at {label!r}")
        field = self.supply.field_var(tail.level, label)
        rest = self.supply.row_var(tail.level)
        tail.expansion = (label, field, rest)
        if self._trace:
            self._emit(
                "expand", self._show_row_var(tail), label,
                self._show(field), self._show_row_var(rest),
            )
        view = RowCons(label, field, rest)
        for b in list(tail.lower_bounds):
            self._constrain_row(b, view)
        for b in list(tail.upper_bounds):
            self._constrain_row(view, b)
        return field, rest

    def _show_row_var(self, v: RowVariable) -> str:
        return self._namer(("r", v.id))


def _tail_after(v: RowVariable, label: str) -> RowVariable:
    while v.expansion is not None:
        l, _, rest = v.expansion
        if l == label:
            return rest
        v = rest
    raise ValueError(f"{label!r} is not an expansion label of {v!r}")


def infer(term: s.Term, env: Optional[TypeEnv] = None, trace=None) -> SimpleType:
    return Engine(trace).infer(term, env)
