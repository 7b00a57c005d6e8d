from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import TypeCheckError, TypeMismatch
from .syntax import (
    ARITH_OPS, BOOL_OPS, CMP_OPS, EQ_OPS, Annot, Assert, Assign, Binop,
    BoolLit, Call, Expr, FunctionDecl, Ident, If, IntLit, Let, Neg, Not,
    Program, Quant, Result, Seq, SourceLoc, Type, UnitLit, Var, While,
)


@dataclass
class TypeInfo:
    """Types of every variable and function return, computed by the checker."""

    var_types: dict[Ident, Type] = field(default_factory=dict)
    return_types: dict[str, Type] = field(default_factory=dict)

    def of(self, ident: Ident) -> Type:
        return self.var_types[ident]


class TypeChecker:
    def __init__(self, program: Program):
        self.program = program
        self.errors: list[TypeMismatch] = []
        self.info = TypeInfo()
        self.functions = {f.name.name: f for f in program.functions}
        self._in_progress: set[str] = set()
        self._ret: Optional[Type] = None

    def error(self, loc: SourceLoc, expected, found):
        self.errors.append(TypeMismatch(loc, str(expected), str(found)))

    def expect(self, e: Expr, want: Type) -> None:
        got = self.expr(e)
        if got is not None and got != want:
            self.error(e.loc, want, got)

    def run(self) -> list[TypeMismatch]:
        for g in self.program.globals:
            ty = g.type
            if g.init is not None:
                got = self.expr(g.init)
                if ty is None:
                    ty = got
                elif got is not None and got != ty:
                    self.error(g.init.loc, ty, got)
            if ty is None:
                ty = Type.INT
            if ty == Type.UNIT:
                self.error(g.loc, "int or bool", ty)
            self.info.var_types[g.ident] = ty
        for f in self.program.functions:
            self.return_type(f)
        return self.errors

    def return_type(self, f: FunctionDecl) -> Optional[Type]:
        name = f.name.name
        if name in self.info.return_types:
            return self.info.return_types[name]
        if f.ret is not None:
            self.info.return_types[name] = f.ret
        elif name in self._in_progress:
            self.error(f.loc, "return type annotation on recursive function", "none")
            return None
        self._in_progress.add(name)
        saved = self._ret
        try:
            for p in f.params:
                if p.type == Type.UNIT:
                    self.error(f.loc, "int or bool", p.type)
                self.info.var_types[p.ident] = p.type
            for a in f.pre:
                self.annot(a)
            ret = f.ret
            if f.body is not None:
                self._ret = ret
                got = self.expr(f.body)
                if ret is None:
                    ret = got if got is not None else Type.UNIT
                elif got is not None and got != ret:
                    self.error(f.body.loc, ret, got)
            elif ret is None:
                ret = Type.UNIT
            self.info.return_types[name] = ret
            self._ret = ret
            for a in f.post:
                self.annot(a)
            return ret
        finally:
            self._ret = saved
            self._in_progress.discard(name)

    def annot(self, a: Annot) -> None:
        got = self.expr(a.formula)
        if got is not None and got != Type.BOOL:
            self.error(a.loc, Type.BOOL, got)

    def expr(self, e: Expr) -> Optional[Type]:
        match e:
            case IntLit():
                return Type.INT
            case BoolLit():
                return Type.BOOL
            case UnitLit():
                return Type.UNIT
            case Var(ident=i):
                return self.info.var_types.get(i)
            case Result():
                return self._ret
            case Binop(op=op, left=a, right=b):
                if op in ARITH_OPS:
                    self.expect(a, Type.INT)
                    self.expect(b, Type.INT)
                    return Type.INT
                if op in CMP_OPS:
                    self.expect(a, Type.INT)
                    self.expect(b, Type.INT)
                    return Type.BOOL
                if op in EQ_OPS:
                    ta = self.expr(a)
                    if ta == Type.UNIT:
                        self.error(a.loc, "int or bool", ta)
                        ta = None
                    if ta is None:
                        self.expr(b)
                    else:
                        self.expect(b, ta)
                    return Type.BOOL
                assert op in BOOL_OPS
                self.expect(a, Type.BOOL)
                self.expect(b, Type.BOOL)
                return Type.BOOL
            case Not(operand=a):
                self.expect(a, Type.BOOL)
                return Type.BOOL
            case Neg(operand=a):
                self.expect(a, Type.INT)
                return Type.INT
            case Assign(target=t, value=v):
                self.expect(v, self.info.var_types.get(t) or Type.INT)
                return Type.UNIT
            case Let(ident=i, value=v, body=b, type=ty):
                got = self.expr(v)
                if ty is not None and got is not None and got != ty:
                    self.error(v.loc, ty, got)
                ty = ty or got
                if ty == Type.UNIT:
                    self.error(v.loc, "int or bool", ty)
                self.info.var_types[i] = ty or Type.INT
                return self.expr(b)
            case Seq(first=a, second=b):
                self.expect(a, Type.UNIT)
                return self.expr(b)
            case If(cond=c, then=a, orelse=b):
                self.expect(c, Type.BOOL)
                ta = self.expr(a)
                if ta is None:
                    return self.expr(b)
                self.expect(b, ta)
                return ta
            case Call(func=f, args=args):
                decl = self.functions[f.name]
                for arg, p in zip(args, decl.params):
                    self.expect(arg, p.type)
                return self.return_type(decl)
            case While(cond=c, invariants=invs, body=b):
                self.expect(c, Type.BOOL)
                for a in invs:
                    self.annot(a)
                self.expect(b, Type.UNIT)
                return Type.UNIT
            case Assert(annot=a):
                self.annot(a)
                return Type.UNIT
            case Quant(var=i, lo=lo, hi=hi, body=b):
                self.info.var_types[i] = Type.INT
                self.expect(lo, Type.INT)
                self.expect(hi, Type.INT)
                self.expect(b, Type.BOOL)
                return Type.BOOL
        raise TypeError(f"unexpected node {type(e).__name__}")


def typecheck(program: Program) -> list[TypeMismatch]:
    """Return the list of type errors of a resolved program (empty when well typed)."""
    return TypeChecker(program).run()


def check_types(program: Program) -> TypeInfo:
    """Typecheck and return the computed type information, raising on errors."""
    checker = TypeChecker(program)
    errors = checker.run()
    if errors:
        raise TypeCheckError(errors)
    return checker.info
