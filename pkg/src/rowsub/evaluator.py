"""Call-by-value evaluation of terms.

The interpreter runs on an explicit continuation stack instead of Python
recursion, so deep (fuel-bounded) recursion in the object program cannot
overflow the host stack.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from . import syntax as s

__all__ = ["VInt", "VClosure", "VRecord", "Value", "Stuck", "OutOfFuel", "evaluate", "show_value"]


@dataclass(frozen=True)
class VInt:
    value: int


@dataclass(eq=False)
class VClosure:
    param: str
    body: s.Term
    env: dict = field(repr=False)


@dataclass(frozen=True)
class VRecord:
    fields: tuple[tuple[str, "Value"], ...]

    def get(self, label: str) -> Optional["Value"]:
        for l, v in self.fields:
            if l == label:
                return v
        return None

    def with_field(self, label: str, value: "Value") -> "VRecord":
        rest = tuple((l, v) for l, v in self.fields if l != label)
        return VRecord(tuple(sorted(rest + ((label, value),), key=lambda p: p[0])))


Value = Union[VInt, VClosure, VRecord]


class Stuck(Exception):
    def __init__(self, term: s.Term, reason: str):
        super().__init__(f"{reason}: {s.print_term(term)}")
        self.term = term
        self.reason = reason


class OutOfFuel(Exception):
    pass


def _record(pairs) -> VRecord:
    return VRecord(tuple(sorted(pairs, key=lambda p: p[0])))


def evaluate(term: s.Term, env: Optional[dict] = None, fuel: int = 10_000) -> Value:
    """Evaluate ``term``; each function application consumes one unit of fuel.

    Raises :class:`Stuck` on a runtime type error and :class:`OutOfFuel`
    when more than ``fuel`` applications would be needed.
    """
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    stack: list[tuple] = []
    # machine state: either ("eval", term, env) or ("ret", value)
    mode, cur, cur_env = "eval", term, dict(env or {})
    value: Value = None  # type: ignore[assignment]

    while True:
        if mode == "eval":
            t = cur
            if isinstance(t, s.IntLit):
                value, mode = VInt(t.value), "ret"
            elif isinstance(t, s.Var):
                if t.name not in cur_env:
                    raise Stuck(t, "unbound variable")
                value, mode = cur_env[t.name], "ret"
            elif isinstance(t, s.Lam):
                value, mode = VClosure(t.param, t.body, cur_env), "ret"
            elif isinstance(t, s.App):
                stack.append(("app_fn", t, cur_env))
                cur = t.fn
            elif isinstance(t, s.Record):
                if not t.fields:
                    value, mode = VRecord(()), "ret"
                else:
                    stack.append(("rec", t, cur_env, []))
                    cur = t.fields[0][1]
            elif isinstance(t, s.Proj):
                stack.append(("proj", t))
                cur = t.subject
            elif isinstance(t, s.Extend):
                stack.append(("ext_subject", t, cur_env))
                cur = t.subject
            elif isinstance(t, s.LetRec):
                if not isinstance(t.bound, s.Lam):
                    raise Stuck(t, "recursive binding of a non-function")
                rec_env = dict(cur_env)
                rec_env[t.name] = VClosure(t.bound.param, t.bound.body, rec_env)
                cur, cur_env = t.body, rec_env
            else:
                raise TypeError(f"not a term: {t!r}")
            continue

        # mode == "ret": hand ``value`` to the innermost frame
        if not stack:
            return value
        frame = stack.pop()
        tag = frame[0]
        if tag == "app_fn":
            _, t, fenv = frame
            stack.append(("app_arg", t, value))
            mode, cur, cur_env = "eval", t.arg, fenv
        elif tag == "app_arg":
            _, t, fn = frame
            if not isinstance(fn, VClosure):
                raise Stuck(t, "application of a non-function")
            if fuel == 0:
                raise OutOfFuel()
            fuel -= 1
            mode, cur = "eval", fn.body
            cur_env = {**fn.env, fn.param: value}
        elif tag == "rec":
            _, t, renv, done = frame
            done.append((t.fields[len(done)][0], value))
            if len(done) == len(t.fields):
                value = _record(done)
            else:
                stack.append(frame)
                mode, cur, cur_env = "eval", t.fields[len(done)][1], renv
        elif tag == "proj":
            _, t = frame
            if not isinstance(value, VRecord):
                raise Stuck(t, "projection from a non-record")
            found = value.get(t.label)
            if found is None:
                raise Stuck(t, f"missing field {t.label}")
            value = found
        elif tag == "ext_subject":
            _, t, eenv = frame
            if not isinstance(value, VRecord):
                raise Stuck(t, "extension of a non-record")
            stack.append(("ext_value", t, value))
            mode, cur, cur_env = "eval", t.value, eenv
        elif tag == "ext_value":
            _, t, rec = frame
            value = rec.with_field(t.label, value)


def show_value(v: Value) -> str:
    if isinstance(v, VInt):
        return str(v.value)
    if isinstance(v, VClosure):
        return "<fun>"
    return "{" + ", ".join(f"{l} = {show_value(x)}" for l, x in v.fields) + "}"
