"""Render ASTs back to surface syntax.

``parse(pretty(p))`` is structurally equal to ``p``; parentheses are added
only where precedence demands them.
"""
from __future__ import annotations

from .syntax import (
    Annot, Assert, Assign, Binop, BoolLit, Call, Expr, Forall, FunctionDecl,
    Global, If, IntLit, Label, Let, Neg, Not, Program, Quant, Result, Seq,
    UnitLit, Var, While,
)

# Precedence levels, loosest first.
SEQ, STMT, IMPL, OR, AND, NOT, CMP, ADD, MUL, UNARY, APP, ATOM = range(12)

_LEVEL = {"->": IMPL, "or": OR, "and": AND, "=": CMP, "<>": CMP, "<": CMP,
          "<=": CMP, ">": CMP, ">=": CMP, "+": ADD, "-": ADD, "*": MUL,
          "div": MUL, "mod": MUL}
_SPELLING = {"and": "/\\", "or": "\\/"}
_CODE_SPELLING = {"and": "&&", "or": "||"}


def _level(e: Expr) -> int:
    match e:
        case Seq() | Let():
            # A let body extends to the end of the enclosing sequence.
            return SEQ
        case If() | Assign() | Quant() | Forall():
            return STMT
        case Binop(op=op):
            return _LEVEL[op]
        case Not():
            return NOT
        case Neg():
            return UNARY
        case IntLit(value=v) if v < 0:
            return UNARY
        case Call():
            return APP
        case Label(body=b):
            return _level(b)
    return ATOM


class Printer:
    def __init__(self, code_ops: bool = False, indent: str = "  "):
        self.code_ops = code_ops
        self.indent = indent

    def expr(self, e: Expr, ctx: int = SEQ) -> str:
        text = self._expr(e)
        if _level(e) < ctx:
            return f"({text})"
        return text

    def _expr(self, e: Expr) -> str:
        match e:
            case IntLit(value=v):
                return str(v)
            case BoolLit(value=b):
                return "true" if b else "false"
            case UnitLit():
                return "()"
            case Var(ident=i):
                return str(i)
            case Result():
                return "result"
            case Binop(op=op, left=a, right=b):
                lvl = _LEVEL[op]
                spelled = (_CODE_SPELLING if self.code_ops else _SPELLING).get(op, op)
                if lvl == CMP:
                    # Comparisons never chain implicitly.
                    return f"{self.expr(a, CMP + 1)} {spelled} {self.expr(b, CMP + 1)}"
                if op == "->":
                    return f"{self.expr(a, IMPL + 1)} -> {self.expr(b, IMPL)}"
                return f"{self.expr(a, lvl)} {spelled} {self.expr(b, lvl + 1)}"
            case Not(operand=a):
                return f"not {self.expr(a, NOT)}"
            case Neg(operand=a):
                if isinstance(a, IntLit):
                    return f"-({a.value})"
                return f"-{self.expr(a, UNARY + 1)}"
            case Assign(target=t, value=v):
                return f"{t} <- {self.expr(v, STMT)}"
            case Let(ident=i, mutable=m, value=v, body=b, type=ty):
                ref = "ref " if m else ""
                annot = f" : {ty}" if ty else ""
                return f"let {ref}{i}{annot} = {self.expr(v, STMT)} in\n{self.expr(b, SEQ)}"
            case Seq(first=a, second=b):
                return f"{self.expr(a, STMT)};\n{self.expr(b, SEQ)}"
            case If(cond=c, then=a, orelse=b):
                return (f"if {self.expr(c, STMT)} then {self.expr(a, STMT)}"
                        f" else {self.expr(b, STMT)}")
            case Call(func=f, args=args):
                if not args:
                    return f"{f} ()"
                return f"{f} " + " ".join(self.expr(x, ATOM) for x in args)
            case While(cond=c, invariants=invs, writes=w, body=b):
                lines = [f"while {self.expr(c, STMT)} do"]
                for inv in invs:
                    lines.append(self.indent + self.invariant(inv))
                if w is not None:
                    lines.append(self.indent + "writes { " + ", ".join(map(str, w)) + " }")
                lines.append(_indent(self.expr(b, SEQ), self.indent))
                lines.append("done")
                return "\n".join(lines)
            case Assert(annot=a):
                return "assert { " + self.formula(a.formula) + " }"
            case Quant(kind=k, var=i, lo=lo, hi=hi, body=b):
                return (f"{k} {i} in {self.expr(lo, ADD)} .. {self.expr(hi, ADD)}. "
                        f"{self.expr(b, IMPL)}")
            case Forall(vars=vs, body=b):
                return f"forall {' '.join(map(str, vs))}. {self.expr(b, IMPL)}"
            case Label(body=b):
                return self._expr(b)
        raise TypeError(f"cannot print {type(e).__name__}")

    def formula(self, e: Expr) -> str:
        saved = self.code_ops
        self.code_ops = False
        try:
            return self.expr(e, SEQ)
        finally:
            self.code_ops = saved

    def invariant(self, a: Annot) -> str:
        label = f"{a.label} " if a.label else ""
        return f"invariant {label}{{ {self.formula(a.formula)} }}"

    def function(self, f: FunctionDecl) -> str:
        head = "val" if f.is_abstract else "let"
        params = " ".join(f"({p.ident}: {p.type})" for p in f.params) or "()"
        out = [f"{head} {f.name} {params}" + (f" : {f.ret}" if f.ret else "")]
        for a in f.pre:
            out.append(f"{self.indent}requires {{ {self.formula(a.formula)} }}")
        for a in f.post:
            out.append(f"{self.indent}ensures {{ {self.formula(a.formula)} }}")
        if f.writes is not None:
            out.append(f"{self.indent}writes {{ " + ", ".join(map(str, f.writes)) + " }")
        if f.body is not None:
            out.append("=")
            out.append(_indent(self.expr(f.body, SEQ), self.indent))
        return "\n".join(out)

    def global_(self, g: Global) -> str:
        if g.init is None:
            return f"val ref {g.ident} : {g.type}"
        annot = f" : {g.type}" if g.type else ""
        return f"let ref {g.ident}{annot} = {self.expr(g.init, STMT)}"

    def program(self, p: Program) -> str:
        parts = [self.global_(g) for g in p.globals]
        parts += [self.function(f) for f in p.functions]
        return "\n\n".join(parts) + ("\n" if parts else "")


def _indent(text: str, pad: str) -> str:
    return "\n".join(pad + line if line else line for line in text.split("\n"))


def pretty(node) -> str:
    """Pretty-print a Program, FunctionDecl or expression."""
    p = Printer(code_ops=True)
    if isinstance(node, Program):
        return p.program(node)
    if isinstance(node, FunctionDecl):
        return p.function(node)
    return p.expr(node)


def pretty_formula(e: Expr) -> str:
    return Printer().formula(e)
