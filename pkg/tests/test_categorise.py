import itertools

import pytest

from contracheck.categorise import IMPRECISE, Verdict, VerdictKind, categorize
from contracheck.counterexample import CandidateCounterexample
from contracheck.finder import solve_builtin
from contracheck.rac import (
    Failure, NonConclusive, NonConclusiveReason, Normal, Oracle, Stuck, StuckReason,
    exec_giant, exec_standard,
)
from contracheck.solver import model_to_ce
from contracheck.syntax import Assertion, Postcondition, SourceLoc, TRUE
from contracheck.vcgen import Goal

from helpers import goal, goals_of

HERE = SourceLoc("t.mw", 5, 3)
THERE = SourceLoc("t.mw", 9, 1)
GOAL = Goal("f/assert@5:3", "f", Assertion(), HERE, (), TRUE, ())
CE = CandidateCounterexample()

NORMAL = Normal(0)
FAIL_HERE = Failure(HERE, Assertion())
FAIL_THERE = Failure(THERE, Postcondition("f"))
STUCK = Stuck(THERE, StuckReason.ORACLE_POSTCONDITION_MISMATCH)
NONCON = NonConclusive(NonConclusiveReason.FUEL_EXHAUSTED, "step budget exhausted", THERE)

STD = {"normal": NORMAL, "fail-here": FAIL_HERE, "fail-there": FAIL_THERE,
       "stuck": STUCK, "nonconclusive": NONCON}
GIANT = STD

# What each combination of standard (row) and giant-step (column) outcome means.
TABLE = {
    "normal": {"normal": VerdictKind.DISCARDED,
               "fail-here": VerdictKind.SUBCONTRACT_WEAKNESS,
               "fail-there": VerdictKind.SUBCONTRACT_WEAKNESS,
               "stuck": VerdictKind.INVALID_COUNTEREXAMPLE,
               "nonconclusive": VerdictKind.NON_CONCLUSIVE},
    "fail-here": dict.fromkeys(GIANT, VerdictKind.NON_CONFORMANCE),
    "fail-there": dict.fromkeys(GIANT, VerdictKind.NON_CONFORMANCE_ELSEWHERE),
    "stuck": {"normal": VerdictKind.DISCARDED,
              "fail-here": VerdictKind.NON_CONCLUSIVE,
              "fail-there": VerdictKind.NON_CONCLUSIVE,
              "stuck": VerdictKind.INVALID_COUNTEREXAMPLE,
              "nonconclusive": VerdictKind.NON_CONCLUSIVE},
    "nonconclusive": {"normal": VerdictKind.DISCARDED,
                      "fail-here": VerdictKind.NON_CONCLUSIVE,
                      "fail-there": VerdictKind.NON_CONCLUSIVE,
                      "stuck": VerdictKind.INVALID_COUNTEREXAMPLE,
                      "nonconclusive": VerdictKind.NON_CONCLUSIVE},
}


@pytest.mark.parametrize("std,giant", list(itertools.product(STD, GIANT)))
def test_every_outcome_pair_has_a_verdict(std, giant):
    v = categorize(GOAL, CE, STD[std], GIANT[giant])
    assert isinstance(v, Verdict)
    assert v.kind == TABLE[std][giant]
    assert (v.goal_id, v.std, v.giant) == (GOAL.id, STD[std], GIANT[giant])


def test_non_conformance_location():
    assert categorize(GOAL, CE, FAIL_HERE, NORMAL).loc == HERE
    assert categorize(GOAL, CE, FAIL_THERE, NORMAL).loc == THERE


def test_imprecise_detail():
    v = categorize(GOAL, CE, NONCON, FAIL_HERE)
    assert v.detail == IMPRECISE and v.loc == HERE


def test_invalid_counterexample_reason():
    v = categorize(GOAL, CE, NORMAL, STUCK)
    assert v.detail == "OraclePostconditionMismatch" and v.loc == THERE


def test_non_conclusive_detail():
    v = categorize(GOAL, CE, NORMAL, NONCON)
    assert v.detail == "FuelExhausted: step budget exhausted"
    assert str(v) == "non-conclusive at 9:1 (FuelExhausted: step budget exhausted)"


def test_verdict_is_pure():
    a = categorize(GOAL, CE, NORMAL, FAIL_THERE)
    b = categorize(GOAL, CE, NORMAL, FAIL_THERE)
    assert a == b


# -- the whole pipeline on the test programs --------------------------------------

def pipeline(name, function, prefix, bound=10):
    prog, info, goals = goals_of(name, function)
    g = goal(goals, prefix)
    ce = model_to_ce(solve_builtin(g, bound).model, g)
    f = prog.function(function)
    return categorize(g, ce, exec_standard(prog, f, ce, info=info),
                      exec_giant(prog, f, Oracle(ce), info=info))


@pytest.mark.parametrize("name,function,prefix,kind,where", [
    ("toy.mw", "main", "main/assert", VerdictKind.SUBCONTRACT_WEAKNESS, (7, 29)),
    ("isqrt_mut1.mw", "isqrt", "isqrt/inv_pres.2", VerdictKind.NON_CONFORMANCE, (9, 20)),
    ("isqrt_mut2.mw", "isqrt", "isqrt/post", VerdictKind.SUBCONTRACT_WEAKNESS, (3, 13)),
    ("weak.mw", "main", "main/post", VerdictKind.SUBCONTRACT_WEAKNESS, (11, 13)),
    ("weak.mw", "wrong", "wrong/assert", VerdictKind.NON_CONFORMANCE, (19, 12)),
    ("divide.mw", "half", "half/div", VerdictKind.NON_CONFORMANCE, (6, 5)),
])
def test_pipeline(name, function, prefix, kind, where):
    v = pipeline(name, function, prefix)
    assert v.kind == kind, str(v)
    assert (v.loc.line, v.loc.column) == where
