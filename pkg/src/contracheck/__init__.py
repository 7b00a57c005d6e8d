"""Deductive verification with counterexample categorisation for a small contract language."""
from __future__ import annotations

from .parser import parse
from .resolve import resolve
from .syntax import Program
from .typecheck import TypeInfo, check_types

__version__ = "0.1.0"


def load(source: str, file: str = "<input>") -> tuple[Program, TypeInfo]:
    """Parse, resolve and typecheck ``source``."""
    program = resolve(parse(source, file))
    return program, check_types(program)


__all__ = ["load", "parse", "resolve", "check_types", "__version__"]
