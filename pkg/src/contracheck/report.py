"""Report assembly and rendering (JSON and plain text)."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

from .categorise import Verdict
from .counterexample import CandidateCounterexample
from .pretty import pretty_formula
from .rac import ExecOutcome, Failure, NonConclusive, Normal, Stuck
from .solver import Sat, SolverError, SolverVerdict, Timeout, Unsat
from .syntax import UNIT, Value, format_value
from .vcgen import Goal

REPORT_VERSION = 1


@dataclass
class GoalResult:
    goal: Goal
    answer: SolverVerdict
    verdict: Optional[Verdict] = None
    trace: dict[str, list[str]] = field(default_factory=dict)

    @property
    def status(self) -> str:
        if isinstance(self.answer, Unsat):
            return "proved"
        if isinstance(self.answer, Timeout):
            return "timeout"
        if isinstance(self.answer, SolverError):
            return "error"
        return "sat" if isinstance(self.answer, Sat) else "unknown"


def json_value(v: Value) -> Any:
    return "()" if v is UNIT else v


def outcome_json(o: ExecOutcome) -> dict:
    match o:
        case Normal(value=v):
            out = {"outcome": "normal", "value": json_value(v)}
        case Failure(loc=loc, kind=kind, snapshot=snap):
            out = {"outcome": "failure", "loc": str(loc), "annotation": kind.describe(),
                   "state": {k: json_value(v) for k, v in snap}}
        case Stuck(loc=loc, reason=r):
            out = {"outcome": "stuck", "loc": str(loc), "reason": r.value}
        case NonConclusive(reason=r, detail=d, loc=loc):
            out = {"outcome": "non-conclusive", "reason": r.value, "detail": d,
                   "loc": None if loc is None else str(loc)}
        case _:
            raise TypeError(o)
    if o.diagnostics:
        out["diagnostics"] = list(o.diagnostics)
    return out


def ce_json(ce: CandidateCounterexample) -> list[dict]:
    return [{"var": str(t.var), "loc": str(t.loc), "value": json_value(t.value)}
            for t in ce.triples]


def goal_json(r: GoalResult) -> dict:
    g = r.goal
    out: dict[str, Any] = {
        "id": g.id,
        "kind": type(g.kind).__name__,
        "annotation": g.kind.describe(),
        "loc": str(g.source),
        "status": r.status,
        "formula": pretty_formula(g.formula),
    }
    if isinstance(r.answer, SolverError):
        out["error"] = r.answer.message
    v = r.verdict
    if v is not None:
        out["verdict"] = {"category": v.kind.value,
                          "loc": None if v.loc is None else str(v.loc),
                          "detail": v.detail}
        out["counterexample"] = ce_json(v.ce)
        out["counterexample_complete"] = v.ce.complete
        out["std_outcome"] = outcome_json(v.std)
        out["giant_outcome"] = outcome_json(v.giant)
    if r.trace:
        out["trace"] = r.trace
    return out


def build_report(files: list[str], functions: list[tuple[str, str, list[GoalResult]]],
                 meta: dict) -> dict:
    """``functions`` lists (file, function name, goal results) in source order."""
    return {
        "version": REPORT_VERSION,
        "files": list(files),
        "functions": [{"name": name, "file": file, "goals": [goal_json(r) for r in results]}
                      for file, name, results in functions],
        "meta": meta,
    }


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"


def _outcome_text(o: dict) -> str:
    match o["outcome"]:
        case "normal":
            return f"normal termination, result {format_value(o['value'])}"
        case "failure":
            return f"failure of {o['annotation']} at {o['loc']}"
        case "stuck":
            return f"stuck at {o['loc']} ({o['reason']})"
    where = f" at {o['loc']}" if o.get("loc") else ""
    return f"non-conclusive ({o['reason']}){where}"


def render_text(report: dict) -> str:
    lines = []
    counts: dict[str, int] = {}
    for fn in report["functions"]:
        lines.append(f"function {fn['name']} ({fn['file']})")
        for g in fn["goals"]:
            counts[g["status"]] = counts.get(g["status"], 0) + 1
            head = f"  {g['id']}: {g['annotation']}"
            if g["status"] == "proved":
                lines.append(f"{head}: proved")
                continue
            if "verdict" not in g:
                extra = f" ({g['error']})" if "error" in g else ""
                lines.append(f"{head}: not proved, solver answered {g['status']}{extra}")
                continue
            v = g["verdict"]
            text = v["category"]
            if v["loc"]:
                text += f" at {v['loc']}"
            if v["detail"]:
                text += f" ({v['detail']})"
            lines.append(f"{head}: {text}")
            ce = ", ".join(f"{t['var']}@{t['loc']} = {format_value(t['value'])}" for t in g["counterexample"])
            if not g["counterexample_complete"]:
                ce += " (incomplete)"
            lines.append(f"    counterexample: {ce or '(empty)'}")
            lines.append(f"    standard execution: {_outcome_text(g['std_outcome'])}")
            lines.append(f"    giant-step execution: {_outcome_text(g['giant_outcome'])}")
            for mode, entries in g.get("trace", {}).items():
                lines.append(f"    trace ({mode}):")
                lines.extend(f"      {e}" for e in entries)
    total = sum(counts.values())
    summary = ", ".join(f"{n} {s}" for s, n in sorted(counts.items()))
    lines.append(f"{total} goal(s)" + (f": {summary}" if summary else ""))
    return "\n".join(lines) + "\n"
