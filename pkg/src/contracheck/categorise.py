"""Turning the two executions seeded by a counterexample into a verdict."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .counterexample import CandidateCounterexample
from .rac import ExecOutcome, Failure, NonConclusive, Normal, Stuck
from .syntax import SourceLoc
from .vcgen import Goal

IMPRECISE = "non-conformity or subcontract weakness"


class VerdictKind(enum.Enum):
    NON_CONFORMANCE = "non-conformance"
    NON_CONFORMANCE_ELSEWHERE = "non-conformance elsewhere"
    SUBCONTRACT_WEAKNESS = "subcontract weakness"
    INVALID_COUNTEREXAMPLE = "invalid counterexample"
    DISCARDED = "discarded"
    NON_CONCLUSIVE = "non-conclusive"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    loc: Optional[SourceLoc] = None
    detail: str = ""
    goal_id: str = ""
    ce: Optional[CandidateCounterexample] = None
    std: Optional[ExecOutcome] = None
    giant: Optional[ExecOutcome] = None

    def __str__(self):
        out = self.kind.value
        if self.loc is not None:
            out += f" at {self.loc.short()}"
        if self.detail:
            out += f" ({self.detail})"
        return out


def categorize(goal: Goal, ce: CandidateCounterexample, std: ExecOutcome,
               giant: ExecOutcome) -> Verdict:
    """Decide what a counterexample says about the program.

    A standard-execution failure is a genuine bug: at the goal's own
    annotation it confirms the goal, anywhere else it points at a different
    one. Otherwise the giant-step execution decides: a failure there means
    some callee contract or loop invariant is too weak, being stuck means
    the counterexample contradicts a contract, and normal termination means
    the counterexample does not falsify anything.
    """
    def verdict(kind, loc=None, detail=""):
        return Verdict(kind, loc, detail, goal.id, ce, std, giant)

    if isinstance(std, Failure):
        if std.loc == goal.source:
            return verdict(VerdictKind.NON_CONFORMANCE, std.loc)
        return verdict(VerdictKind.NON_CONFORMANCE_ELSEWHERE, std.loc)
    # Standard execution never gets stuck; a Stuck there is read like a
    # non-conclusive run so that every pair of outcomes has a verdict.
    if isinstance(std, (NonConclusive, Stuck)) and isinstance(giant, Failure):
        return verdict(VerdictKind.NON_CONCLUSIVE, giant.loc, IMPRECISE)
    match giant:
        case Failure(loc=loc):
            return verdict(VerdictKind.SUBCONTRACT_WEAKNESS, loc)
        case Stuck(loc=loc, reason=reason):
            return verdict(VerdictKind.INVALID_COUNTEREXAMPLE, loc, reason.value)
        case Normal():
            return verdict(VerdictKind.DISCARDED)
        case NonConclusive(reason=reason, detail=detail, loc=loc):
            text = reason.value + (f": {detail}" if detail else "")
            return verdict(VerdictKind.NON_CONCLUSIVE, loc, text)
    raise TypeError(f"unexpected outcome {giant!r}")
