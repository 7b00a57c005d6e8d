"""Deterministic bounded model finder.

Each integer variable ranges over 0, 1, -1, 2, -2, ..., B, -B and each
boolean over false, true, assigned depth-first in var-map order. The first
assignment satisfying the premises and the negated conclusion is returned.

The search is compiled to a nest of Python loops. Every premise conjunct is
tested as soon as its last variable is assigned, and a conjunct ``v = t``
whose right side is already known replaces the loop over ``v`` by that
single value.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from .rac import RuntimeGuard, euclid_div, euclid_mod
from .solver import Sat, SolverVerdict, Unknown, Unsat, symbols
from .syntax import (
    BoolLit, Binop, Expr, Ident, IntLit, Label, Neg, Not, Quant, Type, Var,
    flatten_conj, free_vars,
)
from .vcgen import Goal

DEFAULT_BOUND = 32

_PY_OPS = {
    "+": "+", "-": "-", "*": "*", "=": "==", "<>": "!=",
    "<": "<", "<=": "<=", ">": ">", ">=": ">=", "and": "and", "or": "or",
}


def spiral(bound: int) -> tuple[int, ...]:
    return (0,) + tuple(itertools.chain.from_iterable((k, -k) for k in range(1, bound + 1)))


def _div(a, b):
    if b == 0:
        raise RuntimeGuard(None)
    return euclid_div(a, b)


def _mod(a, b):
    if b == 0:
        raise RuntimeGuard(None)
    return euclid_mod(a, b)


def _has_guard(e: Expr) -> bool:
    if isinstance(e, Binop):
        return e.op in ("div", "mod") or _has_guard(e.left) or _has_guard(e.right)
    if isinstance(e, (Not, Neg, Label)):
        return _has_guard(e.operand if not isinstance(e, Label) else e.body)
    if isinstance(e, Quant):
        return _has_guard(e.lo) or _has_guard(e.hi) or _has_guard(e.body)
    return False


class _Compiler:
    def __init__(self, names: dict[Ident, str]):
        self.names = dict(names)
        self.fresh = itertools.count()

    def expr(self, e: Expr) -> str:
        match e:
            case IntLit(value=n):
                return f"({n})"
            case BoolLit(value=b):
                return repr(b)
            case Var(ident=i):
                return self.names[i]
            case Binop(op="->", left=a, right=b):
                return f"(not {self.expr(a)} or {self.expr(b)})"
            case Binop(op="div", left=a, right=b):
                return f"_div({self.expr(a)}, {self.expr(b)})"
            case Binop(op="mod", left=a, right=b):
                return f"_mod({self.expr(a)}, {self.expr(b)})"
            case Binop(op=op, left=a, right=b):
                return f"({self.expr(a)} {_PY_OPS[op]} {self.expr(b)})"
            case Not(operand=a):
                return f"(not {self.expr(a)})"
            case Neg(operand=a):
                return f"(-{self.expr(a)})"
            case Label(body=b):
                return self.expr(b)
            case Quant(kind=k, var=i, lo=lo, hi=hi, body=b):
                name = f"q{next(self.fresh)}"
                self.names[i] = name
                fn = "all" if k == "forall" else "any"
                out = (f"{fn}({self.expr(b)} for {name} in "
                       f"range({self.expr(lo)}, {self.expr(hi)}))")
                del self.names[i]
                return out
        raise TypeError(f"cannot compile {type(e).__name__}")


@dataclass(frozen=True)
class _Plan:
    order: list[Ident]            # searched variables, var-map order
    checks: list[list[Expr]]      # conjuncts tested after assigning order[k]
    initial: list[Expr]           # conjuncts without searched variables
    pinned: dict[int, Expr]       # depth -> defining term for a `v = t` conjunct


def _plan(goal: Goal, atoms: list[Expr]) -> _Plan:
    free: set[Ident] = set()
    for a in atoms:
        free |= free_vars(a)
    order = [b.logical for b in goal.var_map if b.logical in free]
    depth_of = {v: k for k, v in enumerate(order)}
    checks: list[list[Expr]] = [[] for _ in order]
    initial: list[Expr] = []
    pinned: dict[int, Expr] = {}
    for a in atoms:
        vs = free_vars(a)
        if not vs:
            initial.append(a)
            continue
        d = max(depth_of[v] for v in vs)
        if d not in pinned:
            t = _defining_term(a, order[d], depth_of)
            if t is not None:
                pinned[d] = t
                continue
        checks[d].append(a)
    return _Plan(order, checks, initial, pinned)


def _defining_term(a: Expr, v: Ident, depth_of: dict[Ident, int]) -> Optional[Expr]:
    if not (isinstance(a, Binop) and a.op == "="):
        return None
    for lhs, rhs in ((a.left, a.right), (a.right, a.left)):
        if isinstance(lhs, Var) and lhs.ident == v and v not in free_vars(rhs):
            if all(depth_of[w] < depth_of[v] for w in free_vars(rhs)):
                return rhs
    return None


def _generate(plan: _Plan, types: dict[Ident, Type], bound: int) -> tuple[str, dict[Ident, str]]:
    names = {v: f"v{k}" for k, v in enumerate(plan.order)}
    comp = _Compiler(names)
    lines = ["def search():"]

    def test(atoms, indent):
        pad = "    " * indent
        for a in atoms:
            code = comp.expr(a)
            if _has_guard(a):
                lines.append(f"{pad}try:")
                lines.append(f"{pad}    _ok = {code}")
                lines.append(f"{pad}except _Guard:")
                lines.append(f"{pad}    _ok = False")
                lines.append(f"{pad}if not _ok: {'continue' if indent > 1 else 'return None'}")
            else:
                lines.append(f"{pad}if not {code}: {'continue' if indent > 1 else 'return None'}")

    test(plan.initial, 1)
    indent = 1
    for k, v in enumerate(plan.order):
        pad = "    " * indent
        if k in plan.pinned:
            term = comp.expr(plan.pinned[k])
            if _has_guard(plan.pinned[k]):
                lines.append(f"{pad}try:")
                lines.append(f"{pad}    _dom{k} = ({term},)")
                lines.append(f"{pad}except _Guard:")
                lines.append(f"{pad}    _dom{k} = ()")
                lines.append(f"{pad}for {names[v]} in _dom{k}:")
            else:
                lines.append(f"{pad}for {names[v]} in ({term},):")
        else:
            dom = "_BOOLS" if types[v] == Type.BOOL else "_INTS"
            lines.append(f"{pad}for {names[v]} in {dom}:")
        indent += 1
        test(plan.checks[k], indent)
    pad = "    " * indent
    lines.append(f"{pad}return ({', '.join(names[v] for v in plan.order)}{',' if plan.order else ''})")
    lines.append("    return None")
    return "\n".join(lines) + "\n", names


def _negated_conjuncts(e: Expr) -> list[Expr]:
    """Conjuncts of the negation of ``e``, pushing the negation through -> and or."""
    match e:
        case Label(body=b):
            return _negated_conjuncts(b)
        case Not(operand=a):
            return flatten_conj(a)
        case Binop(op="->", left=a, right=b):
            return flatten_conj(a) + _negated_conjuncts(b)
        case Binop(op="or", left=a, right=b):
            return _negated_conjuncts(a) + _negated_conjuncts(b)
        case BoolLit(value=b):
            return [BoolLit(not b)] if b else []
    return [Not(e, loc=e.loc)]


def query_conjuncts(goal: Goal) -> list[Expr]:
    """Conjuncts of premises and negated conclusion, the finder's search constraints."""
    atoms = []
    for p in goal.premises:
        atoms.extend(flatten_conj(p))
    atoms.extend(_negated_conjuncts(goal.conclusion))
    return atoms


def solve_builtin(goal: Goal, bound: int = DEFAULT_BOUND) -> SolverVerdict:
    """First counterexample to ``goal`` in spiral order within ``[-bound, bound]``.

    Exhaustion is reported as Unsat when the search provably covered every
    candidate (each integer variable is pinned by an equation or held in
    the bound by the premises), otherwise as Unknown without a model.
    """
    if bound < 0:
        raise ValueError("bound must be non-negative")
    atoms = query_conjuncts(goal)
    plan = _plan(goal, atoms)
    types = {b.logical: b.type for b in goal.var_map}
    source, _ = _generate(plan, types, bound)
    scope = {"_div": _div, "_mod": _mod, "_Guard": RuntimeGuard,
             "_INTS": spiral(bound), "_BOOLS": (False, True)}
    try:
        exec(compile(source, f"<search {goal.id}>", "exec"), scope)
        found = scope["search"]()
    except RuntimeGuard:
        found = None
    names = symbols(goal)
    if found is not None:
        values = dict(zip(plan.order, found))
        model = {}
        for b in goal.var_map:
            default = False if b.type == Type.BOOL else 0
            model[names[b.logical]] = values.get(b.logical, default)
        return Sat(model)
    if _covered(plan, atoms, types, bound):
        return Unsat()
    return Unknown(None)


# --------------------------------------------------------------------------
# Coverage


def _covered(plan: _Plan, atoms: list[Expr], types: dict[Ident, Type], bound: int) -> bool:
    need = [v for k, v in enumerate(plan.order) if types[v] == Type.INT and k not in plan.pinned]
    if not need:
        return True
    box = bounds(atoms)
    for v in need:
        lo, hi = box.get(v, (None, None))
        if lo is None or hi is None or lo < -bound or hi > bound:
            return False
    return True


Interval = tuple[Optional[int], Optional[int]]


def _iv(e: Expr, box: dict[Ident, Interval]) -> Interval:
    match e:
        case IntLit(value=n):
            return n, n
        case Var(ident=i):
            return box.get(i, (None, None))
        case Neg(operand=a):
            lo, hi = _iv(a, box)
            return (None if hi is None else -hi), (None if lo is None else -lo)
        case Binop(op="+", left=a, right=b):
            (al, ah), (bl, bh) = _iv(a, box), _iv(b, box)
            return (None if al is None or bl is None else al + bl,
                    None if ah is None or bh is None else ah + bh)
        case Binop(op="-", left=a, right=b):
            (al, ah), (bl, bh) = _iv(a, box), _iv(b, box)
            return (None if al is None or bh is None else al - bh,
                    None if ah is None or bl is None else ah - bl)
        case Binop(op="*", left=a, right=b):
            (al, ah), (bl, bh) = _iv(a, box), _iv(b, box)
            if None in (al, ah, bl, bh):
                return None, None
            prods = [al * bl, al * bh, ah * bl, ah * bh]
            return min(prods), max(prods)
        case Label(body=b):
            return _iv(b, box)
    return None, None


def _narrow(box, v: Ident, lo: Optional[int], hi: Optional[int]) -> bool:
    old_lo, old_hi = box.get(v, (None, None))
    new_lo = lo if old_lo is None else (old_lo if lo is None else max(old_lo, lo))
    new_hi = hi if old_hi is None else (old_hi if hi is None else min(old_hi, hi))
    if (new_lo, new_hi) != (old_lo, old_hi):
        box[v] = (new_lo, new_hi)
        return True
    return False


_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "="}
_NEGATE = {"<": ">=", "<=": ">", ">": "<=", ">=": "<"}


def bounds(atoms: list[Expr], rounds: int = 8) -> dict[Ident, Interval]:
    """Interval bounds on variables implied by comparison conjuncts ``v op t``."""
    facts = []
    for a in atoms:
        while isinstance(a, Label):
            a = a.body
        if isinstance(a, Not) and isinstance(a.operand, Binop) and a.operand.op in _NEGATE:
            a = Binop(_NEGATE[a.operand.op], a.operand.left, a.operand.right)
        if isinstance(a, Binop) and a.op in _FLIP:
            if isinstance(a.left, Var):
                facts.append((a.left.ident, a.op, a.right))
            if isinstance(a.right, Var):
                facts.append((a.right.ident, _FLIP[a.op], a.left))
    box: dict[Ident, Interval] = {}
    for _ in range(rounds):
        changed = False
        for v, op, t in facts:
            lo, hi = _iv(t, box)
            if op in ("<", "<="):
                adj = 1 if op == "<" else 0
                changed |= _narrow(box, v, None, None if hi is None else hi - adj)
            elif op in (">", ">="):
                adj = 1 if op == ">" else 0
                changed |= _narrow(box, v, None if lo is None else lo + adj, None)
            else:
                changed |= _narrow(box, v, lo, hi)
        if not changed:
            break
    return box
