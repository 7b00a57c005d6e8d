"""Name resolution: unique ids, mutability and arity checks, writes inference."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

from .errors import (
    ArityMismatch, AssignToImmutable, DuplicateDeclaration, UnboundVariable,
    WritesViolation,
)
from .syntax import (
    Annot, Assert, Assign, Binop, Call, Expr, FunctionDecl, Global, Ident, If,
    Let, Neg, Not, Param, Program, Quant, Seq, SourceLoc, Var, While, map_expr,
    walk,
)


@dataclass(frozen=True)
class _Binding:
    ident: Ident
    mutable: bool
    is_global: bool


class _Scope:
    def __init__(self, parent: Optional["_Scope"] = None):
        self.parent = parent
        self.names: dict[str, _Binding] = {}

    def lookup(self, name: str) -> Optional[_Binding]:
        s = self
        while s is not None:
            if name in s.names:
                return s.names[name]
            s = s.parent
        return None


class Resolver:
    def __init__(self, program: Program):
        self.program = program
        self.counter = 0
        self.functions: dict[str, FunctionDecl] = {}
        self.fn_idents: dict[str, Ident] = {}

    def fresh(self, name: str) -> Ident:
        self.counter += 1
        return Ident(name, self.counter)

    def run(self) -> Program:
        top = _Scope()
        globals_ = []
        for g in self.program.globals:
            if g.ident.name in top.names:
                raise DuplicateDeclaration(g.loc, f"global {g.ident.name} declared twice")
            init = self.expr(g.init, top, in_post=False) if g.init is not None else None
            ident = self.fresh(g.ident.name)
            top.names[ident.name] = _Binding(ident, True, True)
            globals_.append(Global(ident, g.type, init, loc=g.loc))

        for f in self.program.functions:
            if f.name.name in self.functions:
                raise DuplicateDeclaration(f.loc, f"function {f.name.name} declared twice")
            self.functions[f.name.name] = f
            self.fn_idents[f.name.name] = self.fresh(f.name.name)

        functions = [self.function(f, top) for f in self.program.functions]
        functions = self.infer_function_writes(functions, globals_)
        by_name = {f.name.name: f for f in functions}
        functions = [self.fill_loop_writes(f, by_name) for f in functions]
        return Program(tuple(globals_), tuple(functions))

    # -- declarations -----------------------------------------------------

    def function(self, f: FunctionDecl, top: _Scope) -> FunctionDecl:
        scope = _Scope(top)
        params = []
        for p in f.params:
            if p.ident.name in scope.names:
                raise DuplicateDeclaration(f.loc, f"parameter {p.ident.name} repeated")
            ident = self.fresh(p.ident.name)
            scope.names[ident.name] = _Binding(ident, False, False)
            params.append(Param(ident, p.type))
        pre = tuple(self.annot(a, scope, False) for a in f.pre)
        post = tuple(self.annot(a, scope, True) for a in f.post)
        writes = None
        if f.writes is not None:
            writes = []
            for w in f.writes:
                b = top.lookup(w.name)
                if b is None:
                    raise UnboundVariable(f.loc, f"writes clause of {f.name.name} names unknown global {w.name}")
                if b.ident in writes:
                    continue
                writes.append(b.ident)
            writes = tuple(writes)
        body = self.expr(f.body, scope, False) if f.body is not None else None
        return FunctionDecl(self.fn_idents[f.name.name], tuple(params), f.ret, pre, post,
                            writes, body, loc=f.loc)

    def annot(self, a: Annot, scope: _Scope, in_post: bool) -> Annot:
        return Annot(self.expr(a.formula, scope, in_post), a.label, loc=a.loc)

    # -- expressions ------------------------------------------------------

    def var(self, ident: Ident, loc: SourceLoc, scope: _Scope) -> _Binding:
        b = scope.lookup(ident.name)
        if b is None:
            if ident.name in self.functions:
                raise ArityMismatch(loc, f"function {ident.name} used without arguments")
            raise UnboundVariable(loc, f"unbound variable {ident.name}")
        return b

    def expr(self, e: Expr, scope: _Scope, in_post: bool) -> Expr:
        go = lambda x, s=scope: self.expr(x, s, in_post)  # noqa: E731
        match e:
            case Var(ident=i, loc=loc):
                return Var(self.var(i, loc, scope).ident, loc=loc)
            case Assign(target=t, value=v, loc=loc):
                b = self.var(t, loc, scope)
                if not b.mutable:
                    raise AssignToImmutable(loc, f"cannot assign to immutable variable {t.name}")
                return Assign(b.ident, go(v), loc=loc)
            case Let(ident=i, mutable=m, value=v, body=body, type=ty, loc=loc):
                value = go(v)
                inner = _Scope(scope)
                ident = self.fresh(i.name)
                inner.names[i.name] = _Binding(ident, m, False)
                return Let(ident, m, value, self.expr(body, inner, in_post), ty, loc=loc)
            case Quant(kind=k, var=i, lo=lo, hi=hi, body=body, loc=loc):
                inner = _Scope(scope)
                ident = self.fresh(i.name)
                inner.names[i.name] = _Binding(ident, False, False)
                return Quant(k, ident, go(lo), go(hi), self.expr(body, inner, in_post), loc=loc)
            case Call(func=f, args=args, loc=loc):
                decl = self.functions.get(f.name)
                if decl is None:
                    raise UnboundVariable(loc, f"unknown function {f.name}")
                if len(args) != len(decl.params):
                    raise ArityMismatch(loc, f"{f.name} expects {len(decl.params)} argument(s), "
                                             f"got {len(args)}")
                return Call(self.fn_idents[f.name], tuple(go(a) for a in args), loc=loc)
            case While(cond=c, invariants=invs, writes=w, body=body, loc=loc):
                writes = None
                if w is not None:
                    writes = []
                    for y in w:
                        b = self.var(y, loc, scope)
                        if not b.mutable:
                            raise AssignToImmutable(loc, f"loop writes immutable variable {y.name}")
                        if b.ident not in writes:
                            writes.append(b.ident)
                    writes = tuple(writes)
                invs = tuple(self.annot(a, scope, in_post) for a in invs)
                return While(go(c), invs, writes, go(body), loc=loc)
            case Assert(annot=a, loc=loc):
                return Assert(self.annot(a, scope, in_post), loc=loc)
            case Binop(op=op, left=a, right=b, loc=loc):
                return Binop(op, go(a), go(b), loc=loc)
            case Not(operand=a, loc=loc):
                return Not(go(a), loc=loc)
            case Neg(operand=a, loc=loc):
                return Neg(go(a), loc=loc)
            case Seq(first=a, second=b, loc=loc):
                return Seq(go(a), go(b), loc=loc)
            case If(cond=c, then=a, orelse=b, loc=loc):
                return If(go(c), go(a), go(b), loc=loc)
        return e

    # -- writes -----------------------------------------------------------

    def infer_function_writes(self, functions, globals_):
        """Fixpoint over the call graph: direct global assignments plus callee writes."""
        global_ids = [g.ident for g in globals_]
        global_set = set(global_ids)
        direct, callees = {}, {}
        for f in functions:
            assigned, called = set(), set()
            if f.body is not None:
                for node in walk(f.body):
                    if isinstance(node, Assign) and node.target in global_set:
                        assigned.add(node.target)
                    elif isinstance(node, Call):
                        called.add(node.func.name)
            direct[f.name.name] = assigned
            callees[f.name.name] = called

        effective = {}
        for f in functions:
            effective[f.name.name] = set(f.writes) if f.writes is not None else set(direct[f.name.name])
        changed = True
        while changed:
            changed = False
            for f in functions:
                if f.writes is not None:
                    continue
                acc = effective[f.name.name]
                before = len(acc)
                for c in callees[f.name.name]:
                    acc |= effective[c]
                changed |= len(acc) != before

        out = []
        for f in functions:
            name = f.name.name
            if f.writes is not None:
                needed = set(direct[name])
                for c in callees[name]:
                    needed |= effective[c]
                missing = [g.name for g in global_ids if g in needed and g not in f.writes]
                if missing:
                    raise WritesViolation(f.loc, f"{name} modifies {', '.join(missing)} "
                                                 f"which is not listed in its writes clause")
                out.append(f)
            else:
                writes = tuple(g for g in global_ids if g in effective[name])
                out.append(replace(f, writes=writes))
        return out

    def fill_loop_writes(self, f: FunctionDecl, by_name: dict[str, FunctionDecl]) -> FunctionDecl:
        if f.body is None:
            return f

        def fix(node):
            if not isinstance(node, While):
                return node
            inferred = loop_assigned(node.body, by_name)
            if node.writes is None:
                return replace(node, writes=inferred)
            missing = [str(v) for v in inferred if v not in node.writes]
            if missing:
                raise WritesViolation(node.loc, f"loop modifies {', '.join(missing)} "
                                                f"which is not listed in its writes clause")
            return node

        return replace(f, body=map_expr(f.body, fix))


def loop_assigned(body: Expr, functions: dict[str, FunctionDecl]) -> tuple[Ident, ...]:
    """Variables assigned in ``body`` (directly or via callees), excluding ones it declares."""
    declared = {n.ident for n in walk(body) if isinstance(n, Let)}
    out: list[Ident] = []
    for node in walk(body):
        targets = ()
        if isinstance(node, Assign):
            targets = (node.target,)
        elif isinstance(node, Call):
            targets = functions[node.func.name].writes or ()
        for t in targets:
            if t not in declared and t not in out:
                out.append(t)
    return tuple(out)


def resolve(program: Program) -> Program:
    """Bind every name to a uniquely numbered declaration."""
    return Resolver(program).run()
