"""Runtime assertion checking under standard and giant-step semantics.

Standard execution runs every call and loop body and checks each annotation
as it is met. Giant-step execution replaces a call or a whole loop by one
step whose written variables come from an oracle, then checks the contract
or invariant around the skipped region.
"""
from __future__ import annotations

import enum
import logging
from collections import ChainMap, Counter
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Union

from .counterexample import CandidateCounterexample
from .syntax import (
    RESULT, UNIT, Annot, AnnotationKind, Assert, Assertion, Assign, Binop,
    BoolLit, Call, Expr, FunctionDecl, Ident, If, IntLit, Label, Let,
    LoopInvariantInit, LoopInvariantPreserved, Neg, Not, Postcondition,
    Precondition, Program, Quant, Result, Seq, SourceLoc, Type, UnitLit, Value,
    Var, While, format_value,
)
from .typecheck import TypeInfo, check_types

log = logging.getLogger(__name__)

DEFAULT_FUEL = 100_000


class _Missing:
    def __repr__(self):
        return "?"


MISSING = _Missing()


class RuntimeGuard(Exception):
    """Division or modulo by zero."""

    def __init__(self, loc: SourceLoc):
        self.loc = loc
        super().__init__(f"{loc}: division by zero")


class MissingValue(Exception):
    def __init__(self, ident: Ident):
        self.ident = ident
        super().__init__(f"no value for {ident}")


def euclid_div(a: int, b: int) -> int:
    r = a % abs(b)
    return (a - r) // b


def euclid_mod(a: int, b: int) -> int:
    return a % abs(b)


# --------------------------------------------------------------------------
# Outcomes


class StuckReason(enum.Enum):
    ORACLE_POSTCONDITION_MISMATCH = "OraclePostconditionMismatch"
    ORACLE_INVARIANT_MISMATCH = "OracleInvariantMismatch"
    INVARIANT_PRESERVED_NO_PROGRESS = "InvariantPreservedNoProgress"
    MISSING_ORACLE_VALUE = "MissingOracleValue"


class NonConclusiveReason(enum.Enum):
    FUEL_EXHAUSTED = "FuelExhausted"
    MISSING_INPUT_VALUE = "MissingInputValue"
    RUNTIME_GUARD = "RuntimeGuard"
    ABSTRACT_CALLEE = "AbstractCallee"
    INPUT_PRECONDITION_VIOLATED = "InputPreconditionViolated"


@dataclass(frozen=True)
class Normal:
    value: Value
    diagnostics: tuple[str, ...] = field(default=(), compare=False)

    def __str__(self):
        return f"normal termination with {format_value(self.value)}"


@dataclass(frozen=True)
class Failure:
    loc: SourceLoc
    kind: AnnotationKind
    snapshot: tuple[tuple[str, Value], ...] = ()
    diagnostics: tuple[str, ...] = field(default=(), compare=False)

    def __str__(self):
        return f"failure of {self.kind.describe()} at {self.loc.short()}"


@dataclass(frozen=True)
class Stuck:
    loc: SourceLoc
    reason: StuckReason
    diagnostics: tuple[str, ...] = field(default=(), compare=False)

    def __str__(self):
        return f"stuck at {self.loc.short()} ({self.reason.value})"


@dataclass(frozen=True)
class NonConclusive:
    reason: NonConclusiveReason
    detail: str = ""
    loc: Optional[SourceLoc] = None
    diagnostics: tuple[str, ...] = field(default=(), compare=False)

    def __str__(self):
        where = f" at {self.loc.short()}" if self.loc else ""
        extra = f": {self.detail}" if self.detail else ""
        return f"non-conclusive ({self.reason.value}){where}{extra}"


ExecOutcome = Union[Normal, Failure, Stuck, NonConclusive]


# --------------------------------------------------------------------------
# Formula evaluation


def evaluate(e: Expr, env: Mapping[Ident, Value], result: Optional[Value] = None) -> Value:
    """Evaluate a side-effect-free term or formula."""
    match e:
        case IntLit(value=v) | BoolLit(value=v):
            return v
        case UnitLit():
            return UNIT
        case Var(ident=i):
            v = env.get(i, MISSING)
            if v is MISSING:
                raise MissingValue(i)
            return v
        case Result():
            if result is None:
                raise MissingValue(RESULT)
            return result
        case Binop(op=op, left=a, right=b, loc=loc):
            if op == "and":
                return evaluate(a, env, result) and evaluate(b, env, result)
            if op == "or":
                return evaluate(a, env, result) or evaluate(b, env, result)
            if op == "->":
                return (not evaluate(a, env, result)) or evaluate(b, env, result)
            return apply_binop(op, evaluate(a, env, result), evaluate(b, env, result), loc)
        case Not(operand=a):
            return not evaluate(a, env, result)
        case Neg(operand=a):
            return -evaluate(a, env, result)
        case Quant(kind=k, var=i, lo=lo, hi=hi, body=body):
            start, stop = evaluate(lo, env, result), evaluate(hi, env, result)
            inner = ChainMap({}, env)
            for n in range(start, stop):
                inner[i] = n
                holds = evaluate(body, inner, result)
                if k == "forall" and not holds:
                    return False
                if k == "exists" and holds:
                    return True
            return k == "forall"
        case Label(body=body):
            return evaluate(body, env, result)
    raise TypeError(f"cannot evaluate {type(e).__name__} as a term")


def apply_binop(op: str, x, y, loc: SourceLoc):
    match op:
        case "+":
            return x + y
        case "-":
            return x - y
        case "*":
            return x * y
        case "div":
            if y == 0:
                raise RuntimeGuard(loc)
            return euclid_div(x, y)
        case "mod":
            if y == 0:
                raise RuntimeGuard(loc)
            return euclid_mod(x, y)
        case "=":
            return x == y
        case "<>":
            return x != y
        case "<":
            return x < y
        case "<=":
            return x <= y
        case ">":
            return x > y
        case ">=":
            return x >= y
    raise ValueError(op)


def eval_formula(formula: Expr, env: Mapping[Ident, Value], result: Optional[Value] = None) -> bool:
    """Two-valued evaluation of an annotation in a concrete state.

    Raises RuntimeGuard on division by zero and MissingValue when a free
    variable has no value.
    """
    return bool(evaluate(formula, env, result))


# --------------------------------------------------------------------------
# Oracle


class Oracle:
    """Answers "value of ``var`` written at ``site`` on visit ``occurrence``".

    A counterexample holds one value per (variable, site); later visits of
    the same site fall back to that value.
    """

    def __init__(self, ce: CandidateCounterexample):
        self.ce = ce
        self._values = {(t.var, t.loc): t.value for t in ce.triples}

    def query(self, var: Ident, site: SourceLoc, occurrence: int = 0) -> Optional[Value]:
        return self._values.get((var, site))

    def result(self, site: SourceLoc, occurrence: int = 0) -> Optional[Value]:
        return self.query(RESULT, site, occurrence)


# --------------------------------------------------------------------------
# Interpreter


class _Fail(Exception):
    def __init__(self, loc, kind):
        self.loc, self.kind = loc, kind


class _Stuck(Exception):
    def __init__(self, loc, reason):
        self.loc, self.reason = loc, reason


class _NonConclusive(Exception):
    def __init__(self, reason, detail="", loc=None):
        self.reason, self.detail, self.loc = reason, detail, loc


class Interpreter:
    def __init__(self, program: Program, info: Optional[TypeInfo] = None,
                 fuel: int = DEFAULT_FUEL, oracle: Optional[Oracle] = None,
                 trace: Optional[Callable[[str], None]] = None):
        if fuel < 1:
            raise ValueError("fuel must be at least 1")
        self.program = program
        self.info = info if info is not None else check_types(program)
        self.functions = {f.name.name: f for f in program.functions}
        self.fuel = fuel
        self.oracle = oracle
        self.trace = trace
        self.globals: dict[Ident, Value] = {}
        self.frame: dict[Ident, Value] = {}
        self.visits: Counter = Counter()
        self.diagnostics: list[str] = []

    @property
    def giant(self) -> bool:
        return self.oracle is not None

    def _trace(self, msg: str) -> None:
        if self.trace is not None:
            self.trace(msg)

    # -- entry point ------------------------------------------------------

    def run(self, f: FunctionDecl, entry: Callable[[Ident], Optional[Value]]) -> ExecOutcome:
        if f.body is None:
            return NonConclusive(NonConclusiveReason.ABSTRACT_CALLEE, f"{f.name} has no body", f.loc)
        self.globals = {}
        for g in self.program.globals:
            v = entry(g.ident)
            self.globals[g.ident] = MISSING if v is None else v
        self.frame = {}
        for p in f.params:
            v = entry(p.ident)
            self.frame[p.ident] = MISSING if v is None else v
        try:
            for a in f.pre:
                if not self.holds(a):
                    self._trace(f"input violates precondition at {a.loc.short()}")
                    raise _NonConclusive(NonConclusiveReason.INPUT_PRECONDITION_VIOLATED,
                                         "inputs violate the precondition", a.loc)
            value = self.eval(f.body)
            for a in f.post:
                self.check(a, Postcondition(f.name.name), result=value)
            return Normal(value, tuple(self.diagnostics))
        except _Fail as ex:
            return Failure(ex.loc, ex.kind, self.snapshot(), tuple(self.diagnostics))
        except _Stuck as ex:
            return Stuck(ex.loc, ex.reason, tuple(self.diagnostics))
        except _NonConclusive as ex:
            return NonConclusive(ex.reason, ex.detail, ex.loc, tuple(self.diagnostics))
        except RecursionError:
            return NonConclusive(NonConclusiveReason.FUEL_EXHAUSTED, "recursion too deep",
                                 None, tuple(self.diagnostics))

    def snapshot(self) -> tuple[tuple[str, Value], ...]:
        return tuple((str(k), v) for k, v in {**self.globals, **self.frame}.items())

    # -- annotations ------------------------------------------------------

    def env(self) -> Mapping[Ident, Value]:
        return ChainMap(self.frame, self.globals)

    def holds(self, a: Annot, result: Optional[Value] = None) -> bool:
        try:
            return eval_formula(a.formula, self.env(), result)
        except RuntimeGuard as ex:
            raise _NonConclusive(NonConclusiveReason.RUNTIME_GUARD,
                                 "division by zero in annotation", ex.loc)
        except MissingValue as ex:
            raise _NonConclusive(NonConclusiveReason.MISSING_INPUT_VALUE,
                                 f"no value for {ex.ident}", a.loc)

    def check(self, a: Annot, kind: AnnotationKind, result: Optional[Value] = None) -> None:
        ok = self.holds(a, result)
        self._trace(f"check {kind.describe()} at {a.loc.short()}: {'ok' if ok else 'FAILED'}")
        if not ok:
            raise _Fail(a.loc, kind)

    def consume(self, loc: SourceLoc) -> None:
        self.fuel -= 1
        if self.fuel < 0:
            raise _NonConclusive(NonConclusiveReason.FUEL_EXHAUSTED, "step budget exhausted", loc)

    def ask(self, var: Ident, site: SourceLoc, occurrence: int, result: bool = False) -> Value:
        v = self.oracle.query(var, site, occurrence)
        if v is not None and occurrence > 0:
            self.diagnostics.append(f"oracle fallback for {var}@{site.short()} visit {occurrence}")
        self._trace(f"oracle {'result' if result else var}@{site.short()}#{occurrence} -> "
                    f"{'missing' if v is None else format_value(v)}")
        if v is None:
            raise _Stuck(site, StuckReason.MISSING_ORACLE_VALUE)
        return v

    # -- expressions ------------------------------------------------------

    def lookup(self, ident: Ident) -> Value:
        if ident in self.frame:
            v = self.frame[ident]
        else:
            v = self.globals[ident]
        if v is MISSING:
            raise _NonConclusive(NonConclusiveReason.MISSING_INPUT_VALUE, f"no value for {ident}")
        return v

    def store(self, ident: Ident, value: Value) -> None:
        if ident in self.frame:
            self.frame[ident] = value
        else:
            self.globals[ident] = value

    def eval(self, e: Expr) -> Value:
        match e:
            case IntLit(value=v) | BoolLit(value=v):
                return v
            case UnitLit():
                return UNIT
            case Var(ident=i):
                return self.lookup(i)
            case Binop(op="and", left=a, right=b):
                return self.eval(a) and self.eval(b)
            case Binop(op="or", left=a, right=b):
                return self.eval(a) or self.eval(b)
            case Binop(op=op, left=a, right=b, loc=loc):
                x, y = self.eval(a), self.eval(b)
                if op in ("div", "mod") and y == 0:
                    self._trace(f"division by zero at {loc.short()}")
                    raise _Fail(loc, Assertion(division_guard=True))
                return apply_binop(op, x, y, loc)
            case Not(operand=a):
                return not self.eval(a)
            case Neg(operand=a):
                return -self.eval(a)
            case Assign(target=t, value=v):
                self.store(t, self.eval(v))
                return UNIT
            case Let(ident=i, value=v, body=b):
                self.frame[i] = self.eval(v)
                try:
                    return self.eval(b)
                finally:
                    self.frame.pop(i, None)
            case Seq(first=a, second=b):
                self.eval(a)
                return self.eval(b)
            case If(cond=c, then=a, orelse=b):
                return self.eval(a) if self.eval(c) else self.eval(b)
            case Assert(annot=a):
                self.check(a, Assertion())
                return UNIT
            case Call():
                return self.call(e)
            case While():
                return self.giant_loop(e) if self.giant else self.loop(e)
        raise TypeError(f"cannot execute {type(e).__name__}")

    def call(self, e: Call) -> Value:
        callee = self.functions[e.func.name]
        args = [self.eval(a) for a in e.args]
        saved = self.frame
        self.frame = {p.ident: v for p, v in zip(callee.params, args)}
        try:
            for a in callee.pre:
                self.check(a, Precondition(e.loc, callee.name.name))
            if self.giant:
                return self.giant_call(e, callee)
            if callee.body is None:
                raise _NonConclusive(NonConclusiveReason.ABSTRACT_CALLEE,
                                     f"{callee.name} has no body", e.loc)
            self.consume(e.loc)
            value = self.eval(callee.body)
            for a in callee.post:
                self.check(a, Postcondition(callee.name.name), result=value)
            return value
        finally:
            self.frame = saved

    def giant_call(self, e: Call, callee: FunctionDecl) -> Value:
        occ = self.visits[e.loc]
        self.visits[e.loc] += 1
        values = [(y, self.ask(y, e.loc, occ)) for y in callee.writes or ()]
        if self.info.return_types[callee.name.name] == Type.UNIT:
            value = UNIT
        else:
            value = self.ask(RESULT, e.loc, occ, result=True)
        for y, v in values:
            self.globals[y] = v
        for a in callee.post:
            ok = self.holds(a, value)
            self._trace(f"check postcondition of {callee.name} with oracle values at "
                        f"{a.loc.short()}: {'ok' if ok else 'STUCK'}")
            if not ok:
                raise _Stuck(a.loc, StuckReason.ORACLE_POSTCONDITION_MISMATCH)
        return value

    def loop(self, e: While) -> Value:
        for i, inv in enumerate(e.invariants, 1):
            self.check(inv, LoopInvariantInit(i))
        while self.eval(e.cond):
            self.consume(e.loc)
            self.eval(e.body)
            for i, inv in enumerate(e.invariants, 1):
                self.check(inv, LoopInvariantPreserved(i))
        return UNIT

    def giant_loop(self, e: While) -> Value:
        for i, inv in enumerate(e.invariants, 1):
            self.check(inv, LoopInvariantInit(i))
        occ = self.visits[e.loc]
        self.visits[e.loc] += 1
        values = [(y, self.ask(y, e.loc, occ)) for y in e.writes or ()]
        for y, v in values:
            self.store(y, v)
        for inv in e.invariants:
            ok = self.holds(inv)
            self._trace(f"check invariant with oracle values at {inv.loc.short()}: "
                        f"{'ok' if ok else 'STUCK'}")
            if not ok:
                raise _Stuck(inv.loc, StuckReason.ORACLE_INVARIANT_MISMATCH)
        if not self.eval(e.cond):
            return UNIT
        self.eval(e.body)
        for i, inv in enumerate(e.invariants, 1):
            self.check(inv, LoopInvariantPreserved(i))
        self._trace(f"invariants preserved by one giant step at {e.loc.short()}")
        raise _Stuck(e.loc, StuckReason.INVARIANT_PRESERVED_NO_PROGRESS)


def exec_standard(program: Program, f: FunctionDecl, inputs: CandidateCounterexample,
                  fuel: int = DEFAULT_FUEL, info: Optional[TypeInfo] = None,
                  trace: Optional[Callable[[str], None]] = None) -> ExecOutcome:
    """Run ``f`` normally with parameter and global values taken from ``inputs``."""
    interp = Interpreter(program, info, fuel, None, trace)
    return interp.run(f, lambda ident: inputs.value(ident, f.loc))


def exec_giant(program: Program, f: FunctionDecl, oracle: Oracle,
               fuel: int = DEFAULT_FUEL, info: Optional[TypeInfo] = None,
               trace: Optional[Callable[[str], None]] = None) -> ExecOutcome:
    """Run ``f`` with calls and loops executed in one step each, driven by ``oracle``."""
    interp = Interpreter(program, info, fuel, oracle, trace)
    return interp.run(f, lambda ident: oracle.query(ident, f.loc, 0))
