from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .syntax import Ident, SourceLoc, Value, format_value


@dataclass(frozen=True)
class Triple:
    var: Ident
    loc: SourceLoc
    value: Value

    def __str__(self):
        return f"{self.var}@{self.loc.short()} = {format_value(self.value)}"


@dataclass(frozen=True)
class CandidateCounterexample:
    """Location-tagged values reconstructed from a solver model.

    ``complete`` is False when some variable of the goal had no value in
    the model.
    """

    triples: tuple[Triple, ...] = ()
    origin: str = ""
    complete: bool = True

    def value(self, var: Ident, loc: SourceLoc) -> Optional[Value]:
        for t in self.triples:
            if t.var == var and t.loc == loc:
                return t.value
        return None

    def __str__(self):
        return ", ".join(map(str, self.triples)) or "(empty)"

    @classmethod
    def from_values(cls, entries, origin: str = "") -> "CandidateCounterexample":
        """Build from ``(var, loc, value)`` tuples, e.g. when seeding executions by hand."""
        return cls(tuple(Triple(v, l, x) for v, l, x in entries), origin, True)
