"""SMT-LIB query emission and the external solver driver."""
from __future__ import annotations

import os
import re
import shlex
import subprocess
import tempfile
from typing import Optional

from .errors import ContracheckError
from .rac import MissingValue, RuntimeGuard, evaluate
from .solver import (
    SolverError, SolverVerdict, Sat, Timeout, Unknown, Unsat, symbols, unquote,
)
from .syntax import BoolLit, Binop, Expr, IntLit, Label, Neg, Not, Quant, Type, Var, substitute
from .vcgen import Goal

# Larger constant ranges stay quantified rather than being expanded.
EXPANSION_LIMIT = 1000

_OPS = {
    "+": "+", "-": "-", "*": "*", "div": "div", "mod": "mod",
    "=": "=", "<>": "distinct", "<": "<", "<=": "<=", ">": ">", ">=": ">=",
    "and": "and", "or": "or", "->": "=>",
}


class UnsupportedConstruct(ContracheckError):
    pass


def _const(e: Expr) -> Optional[int]:
    try:
        v = evaluate(e, {})
    except (KeyError, MissingValue, RuntimeGuard):
        return None
    return v if isinstance(v, int) and not isinstance(v, bool) else None


class _Emitter:
    def __init__(self, goal: Goal):
        self.names = symbols(goal)
        self.bound: dict = {}

    def term(self, e: Expr) -> str:
        match e:
            case IntLit(value=n):
                return str(n) if n >= 0 else f"(- {-n})"
            case BoolLit(value=b):
                return "true" if b else "false"
            case Var(ident=i):
                if i in self.bound:
                    return self.bound[i]
                if i not in self.names:
                    raise UnsupportedConstruct(e.loc, f"variable {i} is not declared in the goal")
                return self.names[i]
            case Binop(op=op, left=a, right=b):
                return f"({_OPS[op]} {self.term(a)} {self.term(b)})"
            case Not(operand=a):
                return f"(not {self.term(a)})"
            case Neg(operand=a):
                return f"(- {self.term(a)})"
            case Label(body=b):
                return self.term(b)
            case Quant():
                return self.quant(e)
        raise UnsupportedConstruct(e.loc, f"cannot encode {type(e).__name__}")

    def quant(self, e: Quant) -> str:
        lo, hi = _const(e.lo), _const(e.hi)
        if lo is not None and hi is not None and hi - lo <= EXPANSION_LIMIT:
            parts = [self.term(substitute(e.body, {e.var: IntLit(n)})) for n in range(lo, hi)]
            if not parts:
                return "true" if e.kind == "forall" else "false"
            if len(parts) == 1:
                return parts[0]
            return f"({'and' if e.kind == 'forall' else 'or'} {' '.join(parts)})"
        sym = _quote_bound(f"{e.var.name}!q{e.var.uid}")
        self.bound[e.var] = sym
        try:
            rng = f"(and (<= {self.term(e.lo)} {sym}) (< {sym} {self.term(e.hi)}))"
            body = self.term(e.body)
        finally:
            del self.bound[e.var]
        if e.kind == "forall":
            return f"(forall (({sym} Int)) (=> {rng} {body}))"
        return f"(exists (({sym} Int)) (and {rng} {body}))"


def _quote_bound(sym: str) -> str:
    return f"|{sym}|" if "'" in sym else sym


def _negate(e: Expr) -> Expr:
    match e:
        case BoolLit(value=b):
            return BoolLit(not b, loc=e.loc)
        case Not(operand=a):
            return a
        case Label(body=b):
            return _negate(b)
    return Not(e, loc=e.loc)


def emit_query(goal: Goal) -> str:
    """SMT-LIB script whose satisfiability refutes ``goal``."""
    em = _Emitter(goal)
    lines = ["(set-option :produce-models true)", "(set-logic ALL)"]
    for b in goal.var_map:
        sort = "Bool" if b.type == Type.BOOL else "Int"
        lines.append(f"(declare-const {em.names[b.logical]} {sort})")
    for p in goal.premises:
        lines.append(f"(assert {em.term(p)})")
    lines.append(f"(assert {em.term(_negate(goal.conclusion))})")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Solver output


_TOKEN = re.compile(r'\s+|;[^\n]*|(\()|(\))|("(?:[^"]|"")*")|(\|[^|]*\|)|([^\s()|";]+)')


def read_sexprs(text: str) -> list:
    """Read every s-expression in ``text``; atoms stay strings, lists become lists."""
    stack: list[list] = [[]]
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ValueError(f"unreadable solver output near {text[pos:pos + 20]!r}")
        pos = m.end()
        if m.group(1):
            stack.append([])
        elif m.group(2):
            if len(stack) == 1:
                raise ValueError("unbalanced ')' in solver output")
            done = stack.pop()
            stack[-1].append(done)
        elif m.group(3) or m.group(4) or m.group(5):
            stack[-1].append(m.group(m.lastindex))
    if len(stack) != 1:
        raise ValueError("unbalanced '(' in solver output")
    return stack[0]


def _value(v):
    if isinstance(v, str):
        if v == "true":
            return True
        if v == "false":
            return False
        if re.fullmatch(r"\d+", v):
            return int(v)
    elif len(v) == 2 and v[0] == "-":
        inner = _value(v[1])
        if isinstance(inner, int) and not isinstance(inner, bool):
            return -inner
    return None


def parse_model(items) -> dict:
    model = {}

    def visit(node):
        if not isinstance(node, list):
            return
        if len(node) == 5 and node[0] == "define-fun" and node[2] == []:
            v = _value(node[4])
            if v is not None:
                model[unquote(node[1])] = v
            return
        for child in node:
            visit(child)

    for it in items:
        visit(it)
    return model


def parse_output(stdout: str, returncode: int = 0) -> SolverVerdict:
    try:
        items = read_sexprs(stdout)
    except ValueError as ex:
        return SolverError(str(ex))
    answer = next((it for it in items if isinstance(it, str)), None)
    rest = [it for it in items if isinstance(it, list)]
    if answer == "unsat":
        return Unsat()
    if answer == "timeout":
        return Timeout()
    if answer == "sat":
        return Sat(parse_model(rest))
    if answer == "unknown":
        model = parse_model(rest)
        return Unknown(model or None)
    errors = [it for it in rest if it and it[0] == "error"]
    if errors:
        return SolverError(" ".join(str(x) for x in errors[0][1:]).strip('"'))
    if returncode != 0:
        return SolverError(f"solver exited with status {returncode} without an answer")
    return SolverError(f"unrecognised solver output: {stdout.strip()[:200]!r}")


def solve_external(script: str, command: str, time_limit: float) -> SolverVerdict:
    """Run an external solver on ``script``.

    ``command`` is a shell-style command line. A ``{file}`` placeholder is
    replaced by the path of a temporary file holding the script; without a
    placeholder the script is piped to standard input.
    """
    if time_limit <= 0:
        return Timeout()
    args = shlex.split(command)
    if not args:
        return SolverError("empty solver command")
    path = None
    try:
        if any("{file}" in a for a in args):
            fd, path = tempfile.mkstemp(suffix=".smt2")
            with os.fdopen(fd, "w") as fh:
                fh.write(script)
            args = [a.replace("{file}", path) for a in args]
            stdin = None
        else:
            stdin = script
        proc = subprocess.run(args, input=stdin, capture_output=True, text=True,
                              timeout=time_limit)
    except subprocess.TimeoutExpired:
        return Timeout()
    except OSError as ex:
        return SolverError(f"cannot run {args[0]}: {ex.strerror or ex}")
    finally:
        if path is not None:
            os.unlink(path)
    return parse_output(proc.stdout, proc.returncode)
