"""Trace events emitted during inference and their textual layout."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable

__all__ = ["TraceEvent", "format_trace", "normalize_names"]


@dataclass(frozen=True)
class TraceEvent:
    """One step of an inference run.

    ``kind`` is ``"typeTerm"`` (args: term), ``"constrain"`` (lhs, rhs),
    ``"expand"`` (row var, label, field var, rest var) or ``"result"`` (type).
    All arguments are already rendered to text.
    """

    depth: int
    kind: str
    args: tuple[str, ...]

    def render(self) -> str:
        a = self.args
        if self.kind == "typeTerm":
            body = f"typeTerm {a[0]}"
        elif self.kind == "constrain":
            body = f"constrain {a[0]} <= {a[1]}"
        elif self.kind == "expand":
            row, label, field, rest = a
            body = f"expand {row} +{label} ~> {{{label}: {field} ; {rest}}}"
        elif self.kind == "result":
            body = f"= {a[0]}"
        else:
            raise ValueError(f"unknown trace event {self.kind!r}")
        return "| " * self.depth + body


def format_trace(events: Iterable[TraceEvent]) -> str:
    return "".join(e.render() + "\n" for e in events)


_VAR_RE = re.compile(r"'(r\d+|f\d+|[a-z]+)")


def normalize_names(text: str) -> str:
    """Rename variables by order of first appearance, per kind.

    Two traces that differ only in how fresh variables were numbered
    normalize to the same text.
    """
    names: dict[str, str] = {}
    counts = {"t": 0, "r": 0, "f": 0}

    def rename(m: re.Match) -> str:
        old = m.group(1)
        if old not in names:
            kind = old[0] if old[0] in "rf" and old[1:].isdigit() else "t"
            n = counts[kind]
            counts[kind] += 1
            names[old] = f"'{kind}{n}" if kind != "t" else f"'t{n}"
        return names[old]

    return _VAR_RE.sub(rename, text)
