"""Solver verdicts, SMT symbol naming and model-to-counterexample conversion."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from .counterexample import CandidateCounterexample, Triple
from .syntax import Ident, Value
from .vcgen import Goal

# A model assigns values to the SMT symbols of a goal's logical variables.
Model = Mapping[str, Value]


@dataclass(frozen=True)
class Unsat:
    def __str__(self):
        return "unsat"


@dataclass(frozen=True)
class Sat:
    model: Model = field(default_factory=dict)

    def __str__(self):
        return "sat"


@dataclass(frozen=True)
class Unknown:
    model: Optional[Model] = None

    def __str__(self):
        return "unknown" if self.model is None else "unknown (with model)"


@dataclass(frozen=True)
class Timeout:
    def __str__(self):
        return "timeout"


@dataclass(frozen=True)
class SolverError:
    message: str

    def __str__(self):
        return f"solver error: {self.message}"


SolverVerdict = Union[Unsat, Sat, Unknown, Timeout, SolverError]


def verdict_model(v: SolverVerdict) -> Optional[Model]:
    """The model carried by a Sat or Unknown verdict, if any."""
    if isinstance(v, (Sat, Unknown)):
        return v.model
    return None


# SMT-LIB reserved words and core/arith function names a program identifier
# could collide with.
_SMT_RESERVED = frozenset("""
    _ ! as let exists forall match par true false not and or xor ite distinct
    div mod abs to_real to_int is_int assert check-sat declare-const
    declare-fun define-fun get-model set-logic set-option exit push pop
    Int Bool Real BINARY DECIMAL HEXADECIMAL NUMERAL STRING
""".split())


def _quote(sym: str) -> str:
    if sym in _SMT_RESERVED or "'" in sym or sym[0].isdigit():
        return f"|{sym}|"
    return sym


def symbols(goal: Goal) -> dict[Ident, str]:
    """SMT symbol of every var-map variable, in var-map order.

    Program variables use their source name unless two of them share it,
    in which case the unique id is appended. Fresh variables print as
    ``name!k``.
    """
    names = [b.logical.name for b in goal.var_map if not b.logical.is_fresh]
    clash = {n for n in names if names.count(n) > 1}
    out: dict[Ident, str] = {}
    for b in goal.var_map:
        v = b.logical
        if v.is_fresh:
            sym = str(v)
        elif v.name in clash:
            sym = f"{v.name}!v{v.uid}"
        else:
            sym = v.name
        out[v] = _quote(sym)
    return out


def unquote(sym: str) -> str:
    if len(sym) >= 2 and sym[0] == "|" and sym[-1] == "|":
        return sym[1:-1]
    return sym


def model_env(model: Model, goal: Goal) -> dict[Ident, Value]:
    """Translate a model back to logical variables, skipping unassigned ones."""
    plain = {unquote(k): v for k, v in model.items()}
    env = {}
    for ident, sym in symbols(goal).items():
        s = unquote(sym)
        if s in plain:
            env[ident] = plain[s]
    return env


def model_to_ce(model: Model, goal: Goal) -> CandidateCounterexample:
    """Attach model values to program points through the goal's var-map."""
    env = model_env(model, goal)
    rows = []
    complete = True
    for index, b in enumerate(goal.var_map):
        if b.logical not in env:
            complete = False
            continue
        rows.append((b.loc, index, Triple(b.program_var, b.loc, env[b.logical])))
    rows.sort(key=lambda r: (r[0], r[1]))
    return CandidateCounterexample(tuple(r[2] for r in rows), goal.id, complete)
