from __future__ import annotations

from dataclasses import dataclass

from .syntax import SourceLoc


class ContracheckError(Exception):
    """Base class for user-facing errors about an input program."""

    def __init__(self, loc: SourceLoc | None, message: str):
        self.loc = loc
        self.message = message
        super().__init__(f"{loc}: {message}" if loc else message)


class LexError(ContracheckError):
    pass


class ParseError(ContracheckError):
    def __init__(self, loc: SourceLoc, expected: frozenset[str] | set[str], message: str = ""):
        self.expected = frozenset(expected)
        if not message:
            message = "expected " + " or ".join(sorted(self.expected))
        super().__init__(loc, message)


class ResolveError(ContracheckError):
    pass


class UnboundVariable(ResolveError):
    pass


class AssignToImmutable(ResolveError):
    pass


class ArityMismatch(ResolveError):
    pass


class WritesViolation(ResolveError):
    pass


class MisplacedResult(ResolveError):
    pass


class DuplicateDeclaration(ResolveError):
    pass


@dataclass(frozen=True)
class TypeMismatch:
    loc: SourceLoc
    expected: str
    found: str

    def __str__(self):
        return f"{self.loc}: type mismatch: expected {self.expected}, found {self.found}"


class TypeCheckError(ContracheckError):
    def __init__(self, errors: list[TypeMismatch]):
        self.errors = list(errors)
        first = self.errors[0]
        super().__init__(first.loc, "\n".join(str(e) for e in self.errors))


class AbstractFunction(ContracheckError):
    pass
