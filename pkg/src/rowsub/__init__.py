"""Type inference with algebraic subtyping and extensible records."""

from .coalesce import coalesce, print_type
from .evaluator import OutOfFuel, Stuck, evaluate
from .ground import enumerate_ground_types, ground_subtype
from .infer import Engine, MissingField, NotASubtype, TypingError, UnboundVariable, infer
from .syntax import DuplicateLabel, ParseError, parse, print_term

__all__ = [
    "parse",
    "print_term",
    "ParseError",
    "DuplicateLabel",
    "Engine",
    "infer",
    "infer_type",
    "TypingError",
    "NotASubtype",
    "MissingField",
    "UnboundVariable",
    "coalesce",
    "print_type",
    "ground_subtype",
    "enumerate_ground_types",
    "evaluate",
    "Stuck",
    "OutOfFuel",
]

__version__ = "0.1.0"


def infer_type(source: str) -> str:
    """Parse ``source`` and return its printed principal type."""
    return print_type(coalesce(infer(parse(source))))
