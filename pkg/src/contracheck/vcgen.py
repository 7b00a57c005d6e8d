"""Weakest preconditions and goal splitting.

``wp`` follows the textbook rules for assignment, sequence, conditionals and
assertions. Loops and calls use the invariant and contract rules: a loop
checks its invariants, then quantifies over fresh values of its written
variables; a call checks the callee precondition and then quantifies over
fresh values of the callee's writes and result.

Every proof obligation is wrapped in a ``Label`` naming the annotation it
checks, so ``split`` can cut the resulting formula into one goal per
obligation.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional

from .errors import AbstractFunction
from .syntax import (
    RESULT, TRUE, Annot, AnnotationKind, Assert, Assertion, Assign,
    Binop, BoolLit, Call, Expr, Forall, FunctionDecl, Ident, If, IntLit, Label,
    Let, LoopInvariantInit, LoopInvariantPreserved, Neg, Not, Postcondition,
    Precondition, Program, Quant, Result, Seq, SourceLoc, Type, UnitLit, Var,
    While, conj, flatten_conj, is_pure, strip_labels, substitute,
)
from .typecheck import TypeInfo, check_types


@dataclass(frozen=True)
class VarBinding:
    """Links a logical variable of a goal to the program point it denotes."""

    logical: Ident
    program_var: Ident
    loc: SourceLoc
    type: Type


@dataclass(frozen=True)
class Goal:
    id: str
    function: str
    kind: AnnotationKind
    source: SourceLoc
    premises: tuple[Expr, ...]
    conclusion: Expr
    var_map: tuple[VarBinding, ...]

    @property
    def formula(self) -> Expr:
        body = self.conclusion
        if self.premises:
            body = Binop("->", conj(self.premises), body)
        return body

    def binding(self, logical: Ident) -> Optional[VarBinding]:
        for b in self.var_map:
            if b.logical == logical:
                return b
        return None


def implies(a: Expr, b: Expr) -> Expr:
    if a == TRUE:
        return b
    if b == TRUE:
        return TRUE
    return Binop("->", a, b, loc=b.loc)


def and_(a: Expr, b: Expr) -> Expr:
    if a == TRUE:
        return b
    if b == TRUE:
        return a
    return Binop("and", a, b, loc=a.loc)


def guards(e: Expr) -> Expr:
    """Non-zero-divisor obligations of a pure term, respecting lazy connectives."""
    match e:
        case Binop(op=("div" | "mod"), left=a, right=b, loc=loc):
            nz = Label(Assertion(division_guard=True), loc, Binop("<>", b, IntLit(0), loc=loc))
            return and_(and_(guards(a), guards(b)), nz)
        case Binop(op=("and" | "->"), left=a, right=b):
            return and_(guards(a), implies(a, guards(b)))
        case Binop(op="or", left=a, right=b):
            return and_(guards(a), implies(Not(a), guards(b)))
        case Binop(left=a, right=b):
            return and_(guards(a), guards(b))
        case Not(operand=a) | Neg(operand=a) | Label(body=a):
            return guards(a)
        case Quant(var=i, lo=lo, hi=hi, body=b, loc=loc):
            inner = guards(b)
            if inner == TRUE:
                return and_(guards(lo), guards(hi))
            first = next(n for n in _labels(inner))
            wrapped = Label(first.kind, first.source,
                            Quant("forall", i, lo, hi, strip_labels(inner), loc=loc))
            return and_(and_(guards(lo), guards(hi)), wrapped)
    return TRUE


def _labels(e: Expr):
    if isinstance(e, Label):
        yield e
    elif isinstance(e, Binop):
        yield from _labels(e.left)
        yield from _labels(e.right)


class VCGen:
    def __init__(self, program: Program, info: Optional[TypeInfo] = None):
        self.program = program
        self.info = info if info is not None else check_types(program)
        self.functions = {f.name.name: f for f in program.functions}
        self.counter = 0
        # fresh logical variable -> (program variable, program point, type)
        self.origins: dict[Ident, tuple[Ident, SourceLoc, Type]] = {}

    def fresh(self, var: Ident, loc: SourceLoc, ty: Type) -> Ident:
        self.counter += 1
        v = Ident(var.name, -self.counter)
        self.origins[v] = (var, loc, ty)
        return v

    def temp(self) -> Ident:
        self.counter += 1
        return Ident("tmp", -self.counter)

    def check(self, a: Annot, kind: AnnotationKind, subst: Optional[dict] = None,
              result: Optional[Expr] = None) -> Expr:
        """Obligation that annotation ``a`` holds, preceded by its division guards."""
        phi = a.formula
        if subst or result is not None:
            phi = substitute(phi, subst or {}, result)
        g = guards(phi)
        return and_(g, implies(strip_labels(g), Label(kind, a.loc, phi, loc=a.loc)))

    # -- weakest preconditions -------------------------------------------

    def wp(self, e: Expr, q: Expr) -> Expr:
        """Weakest precondition of ``e`` for ``q``; ``Result`` in ``q`` denotes e's value."""
        if is_pure(e):
            g = guards(e)
            return and_(g, implies(strip_labels(g), substitute(q, {}, result=e)))
        unit_q = lambda: substitute(q, {}, result=UnitLit())  # noqa: E731
        match e:
            case Assign(target=x, value=v):
                return self.wp(v, substitute(unit_q(), {x: Result()}))
            case Seq(first=a, second=b):
                return self.wp(a, self.wp(b, q))
            case Let(ident=x, value=v, body=b):
                return self.wp(v, substitute(self.wp(b, q), {x: Result()}))
            case If(cond=c, then=a, orelse=b):
                branch = and_(implies(Result(), self.wp(a, q)),
                              implies(Not(Result()), self.wp(b, q)))
                return self.wp(c, branch)
            case Assert(annot=a):
                return and_(self.check(a, Assertion()), implies(a.formula, unit_q()))
            case Call():
                return self.wp_call(e, q)
            case While():
                return self.wp_loop(e, unit_q())
            case Binop(op="and", left=a, right=b, loc=loc):
                return self.wp(If(a, b, BoolLit(False, loc=loc), loc=loc), q)
            case Binop(op="or", left=a, right=b, loc=loc):
                return self.wp(If(a, BoolLit(True, loc=loc), b, loc=loc), q)
            case Binop(op=op, left=a, right=b, loc=loc):
                t1, t2 = self.temp(), self.temp()
                return self.wp(Let(t1, False, a, Let(t2, False, b,
                               Binop(op, Var(t1), Var(t2), loc=loc))), q)
            case Not(operand=a, loc=loc):
                t = self.temp()
                return self.wp(Let(t, False, a, Not(Var(t), loc=loc)), q)
            case Neg(operand=a, loc=loc):
                t = self.temp()
                return self.wp(Let(t, False, a, Neg(Var(t), loc=loc)), q)
        raise TypeError(f"no wp rule for {type(e).__name__}")

    def wp_call(self, e: Call, q: Expr) -> Expr:
        if not all(is_pure(a) for a in e.args):
            temps = [self.temp() for _ in e.args]
            inner: Expr = Call(e.func, tuple(Var(t) for t in temps), loc=e.loc)
            for t, a in reversed(list(zip(temps, e.args))):
                inner = Let(t, False, a, inner)
            return self.wp(inner, q)
        callee = self.functions[e.func.name]
        arg_guards = conj(guards(a) for a in e.args)
        sub = {p.ident: a for p, a in zip(callee.params, e.args)}
        kind = Precondition(e.loc, callee.name.name)
        if callee.pre:
            pre = conj(self.check(a, kind, sub) for a in callee.pre)
        else:
            pre = Label(kind, callee.loc, TRUE, loc=callee.loc)

        writes = callee.writes or ()
        fresh = {y: Var(self.fresh(y, e.loc, self.info.of(y))) for y in writes}
        ret = self.info.return_types[callee.name.name]
        if ret == Type.UNIT:
            value: Expr = UnitLit()
            bound = [v.ident for v in fresh.values()]
        else:
            rv = self.fresh(RESULT, e.loc, ret)
            value = Var(rv)
            bound = [v.ident for v in fresh.values()] + [rv]
        # Written globals take their post-call values in the callee postcondition
        # and in q; parameters keep the argument values from before the call.
        post = conj(substitute(substitute(a.formula, fresh, result=value), sub)
                    for a in callee.post)
        after = substitute(q, fresh, result=value)
        body = implies(post, after)
        if bound:
            body = Forall(tuple(bound), body, loc=e.loc)
        return and_(arg_guards, implies(strip_labels(arg_guards), and_(pre, body)))

    def wp_loop(self, e: While, q: Expr) -> Expr:
        init = conj(self.check(a, LoopInvariantInit(i)) for i, a in enumerate(e.invariants, 1))
        inv = conj(a.formula for a in e.invariants)
        preserved = conj(self.check(a, LoopInvariantPreserved(i))
                         for i, a in enumerate(e.invariants, 1))
        step = and_(implies(Result(), self.wp(e.body, preserved)), implies(Not(Result()), q))
        inner = implies(inv, self.wp(e.cond, step))
        writes = e.writes or ()
        fresh = {y: Var(self.fresh(y, e.loc, self.info.of(y))) for y in writes}
        inner = substitute(inner, fresh)
        if fresh:
            inner = Forall(tuple(v.ident for v in fresh.values()), inner, loc=e.loc)
        return and_(init, inner)

    # -- whole function ---------------------------------------------------

    def function_vc(self, f: FunctionDecl) -> Expr:
        if f.body is None:
            raise AbstractFunction(f.loc, f"{f.name} has no body to verify")
        post = conj(self.check(a, Postcondition(f.name.name)) for a in f.post)
        return self.wp(f.body, post)

    def split(self, f: FunctionDecl) -> list[Goal]:
        self.counter = 0
        self.origins = {}
        vc = self.function_vc(f)
        entry = [VarBinding(p.ident, p.ident, f.loc, p.type) for p in f.params]
        entry += [VarBinding(g.ident, g.ident, f.loc, self.info.of(g.ident))
                  for g in self.program.globals]
        premises = [p for a in f.pre for p in flatten_conj(a.formula)]
        goals: list[Goal] = []
        seen: Counter = Counter()

        def emit(label: Label, prem: list[Expr], bound: list[Ident]):
            fresh = [VarBinding(v, *self.origins[v]) for v in bound if v in self.origins]
            base = _goal_id(f.name.name, label)
            seen[base] += 1
            gid = base if seen[base] == 1 else f"{base}#{seen[base]}"
            goals.append(Goal(gid, f.name.name, label.kind, label.source, tuple(prem),
                              label.body, tuple(entry + fresh)))

        def go(phi: Expr, prem: list[Expr], bound: list[Ident]):
            match phi:
                case Label():
                    emit(phi, prem, bound)
                case Binop(op="and", left=a, right=b):
                    go(a, prem, bound)
                    go(b, prem, bound)
                case Binop(op="->", left=a, right=b):
                    go(b, prem + flatten_conj(strip_labels(a)), bound)
                case Forall(vars=vs, body=b):
                    go(b, prem, bound + list(vs))
                case BoolLit(value=True):
                    pass
                case _:
                    raise AssertionError(f"unlabelled obligation in VC: {phi!r}")

        go(vc, premises, [])
        return goals


def _goal_id(fn: str, label: Label) -> str:
    k = label.kind
    if isinstance(k, Precondition):
        return f"{fn}/pre.{k.callee}@{k.call_site.short()}"
    if isinstance(k, (LoopInvariantInit, LoopInvariantPreserved)):
        return f"{fn}/{k.tag}.{k.index}@{label.source.short()}"
    if isinstance(k, Assertion) and k.division_guard:
        return f"{fn}/div@{label.source.short()}"
    return f"{fn}/{k.tag}@{label.source.short()}"


def wp(e: Expr, q: Expr, program: Optional[Program] = None, info: Optional[TypeInfo] = None) -> Expr:
    """Weakest precondition of a single expression.

    ``program`` is only needed when ``e`` contains calls or loops.
    """
    program = program or Program()
    gen = VCGen(program, info if info is not None else _LenientInfo())
    return gen.wp(e, q)


class _LenientInfo(TypeInfo):
    """Defaults every unknown variable to int; for standalone ``wp`` calls."""

    def of(self, ident: Ident) -> Type:
        return self.var_types.get(ident, Type.INT)


def split(program: Program, f: FunctionDecl, info: Optional[TypeInfo] = None) -> list[Goal]:
    """One goal per proof obligation of ``f``, in source order."""
    return VCGen(program, info).split(f)
