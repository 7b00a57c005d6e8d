"""Abstract syntax of the contract language.

Every node is an immutable dataclass. Source locations never take part in
equality, so two trees compare equal when their structure is equal.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

_IDENT_RE = re.compile(r"[a-zA-Z_][a-zA-Z0-9_']*\Z")


@dataclass(frozen=True, order=True)
class SourceLoc:
    file: str
    line: int
    column: int

    def __post_init__(self):
        if self.line < 1 or self.column < 1:
            raise ValueError(f"invalid source location {self.line}:{self.column}")

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"

    def short(self) -> str:
        return f"{self.line}:{self.column}"


NOLOC = SourceLoc("<none>", 1, 1)


@dataclass(frozen=True)
class Ident:
    """A variable or function name.

    ``uid`` is 0 straight out of the parser and positive after resolution.
    Negative uids mark logical variables minted by the VC generator; they
    print as ``name!k``.
    """

    name: str
    uid: int = 0

    def __post_init__(self):
        if not _IDENT_RE.match(self.name):
            raise ValueError(f"invalid identifier {self.name!r}")

    @property
    def is_fresh(self) -> bool:
        return self.uid < 0

    def __str__(self):
        if self.uid < 0:
            return f"{self.name}!{-self.uid}"
        return self.name


# Pseudo-variable naming the value returned by a call in oracles and
# counterexamples.
RESULT = Ident("result", 0)


class Type(enum.Enum):
    INT = "int"
    BOOL = "bool"
    UNIT = "unit"

    def __str__(self):
        return self.value


class _Unit:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "()"

    def __reduce__(self):
        return (_Unit, ())


UNIT = _Unit()

Value = Union[int, bool, _Unit]


def format_value(v: Value) -> str:
    if v is UNIT:
        return "()"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


# --------------------------------------------------------------------------
# Annotation kinds


@dataclass(frozen=True)
class Precondition:
    call_site: SourceLoc
    callee: str

    tag = "pre"

    def describe(self):
        return f"precondition of {self.callee} (call at {self.call_site.short()})"


@dataclass(frozen=True)
class Postcondition:
    function: str

    tag = "post"

    def describe(self):
        return f"postcondition of {self.function}"


@dataclass(frozen=True)
class LoopInvariantInit:
    index: int

    tag = "inv_init"

    def describe(self):
        return f"initialisation of loop invariant {self.index}"


@dataclass(frozen=True)
class LoopInvariantPreserved:
    index: int

    tag = "inv_pres"

    def describe(self):
        return f"preservation of loop invariant {self.index}"


@dataclass(frozen=True)
class Assertion:
    division_guard: bool = False

    tag = "assert"

    def describe(self):
        return "division by zero check" if self.division_guard else "assertion"


AnnotationKind = Union[
    Precondition, Postcondition, LoopInvariantInit, LoopInvariantPreserved, Assertion
]


# --------------------------------------------------------------------------
# Expressions and formulas

ARITH_OPS = frozenset({"+", "-", "*", "div", "mod"})
CMP_OPS = frozenset({"<", "<=", ">", ">="})
EQ_OPS = frozenset({"=", "<>"})
BOOL_OPS = frozenset({"and", "or", "->"})
BINOPS = ARITH_OPS | CMP_OPS | EQ_OPS | BOOL_OPS


@dataclass(frozen=True)
class IntLit:
    value: int
    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class BoolLit:
    value: bool
    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class UnitLit:
    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    ident: Ident
    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class Result:
    """The value returned by the enclosing function (postconditions only)."""

    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class Binop:
    op: str
    left: "Expr"
    right: "Expr"
    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)

    def __post_init__(self):
        if self.op not in BINOPS:
            raise ValueError(f"unknown operator {self.op!r}")


@dataclass(frozen=True)
class Not:
    operand: "Expr"
    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class Assign:
    target: Ident
    value: "Expr"
    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class Let:
    ident: Ident
    mutable: bool
    value: "Expr"
    body: "Expr"
    type: Optional[Type] = None
    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class Seq:
    first: "Expr"
    second: "Expr"
    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class If:
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"
    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    func: Ident
    args: tuple["Expr", ...]
    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class Annot:
    """An annotation formula; ``loc`` is its first token."""

    formula: "Expr"
    label: Optional[str] = None
    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class While:
    cond: "Expr"
    invariants: tuple[Annot, ...]
    writes: Optional[tuple[Ident, ...]]
    body: "Expr"
    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class Assert:
    annot: Annot
    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class Quant:
    """Bounded quantifier over the half-open integer range ``[lo, hi)``."""

    kind: str  # "forall" | "exists"
    var: Ident
    lo: "Expr"
    hi: "Expr"
    body: "Expr"
    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)


# The two node types below never come out of the parser; the VC generator
# builds them.


@dataclass(frozen=True)
class Forall:
    """Unbounded universal quantifier over fresh logical variables."""

    vars: tuple[Ident, ...]
    body: "Expr"
    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class Label:
    """Marks a subformula as the proof obligation of one annotation."""

    kind: AnnotationKind
    source: SourceLoc
    body: "Expr"
    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)


Expr = Union[
    IntLit, BoolLit, UnitLit, Var, Result, Binop, Not, Neg, Assign, Let, Seq,
    If, Call, While, Assert, Quant, Forall, Label,
]

TRUE = BoolLit(True)
FALSE = BoolLit(False)


# --------------------------------------------------------------------------
# Declarations


@dataclass(frozen=True)
class Param:
    ident: Ident
    type: Type


@dataclass(frozen=True)
class Global:
    ident: Ident
    type: Optional[Type]
    init: Optional[Expr]
    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)


@dataclass(frozen=True)
class FunctionDecl:
    name: Ident
    params: tuple[Param, ...]
    ret: Optional[Type]
    pre: tuple[Annot, ...]
    post: tuple[Annot, ...]
    writes: Optional[tuple[Ident, ...]]
    body: Optional[Expr]
    loc: SourceLoc = field(default=NOLOC, compare=False, repr=False)

    @property
    def is_abstract(self) -> bool:
        return self.body is None


@dataclass(frozen=True)
class Program:
    globals: tuple[Global, ...] = ()
    functions: tuple[FunctionDecl, ...] = ()

    def function(self, name: Union[str, Ident]) -> FunctionDecl:
        key = name.name if isinstance(name, Ident) else name
        for f in self.functions:
            if f.name.name == key:
                return f
        raise KeyError(key)


# --------------------------------------------------------------------------
# Generic helpers


def children(e: Expr) -> Iterator[Expr]:
    match e:
        case Binop(left=a, right=b) | Seq(first=a, second=b):
            yield a
            yield b
        case Not(operand=a) | Neg(operand=a):
            yield a
        case Assign(value=v):
            yield v
        case Let(value=v, body=b):
            yield v
            yield b
        case If(cond=c, then=a, orelse=b):
            yield c
            yield a
            yield b
        case Call(args=args):
            yield from args
        case While(cond=c, invariants=invs, body=b):
            yield c
            for inv in invs:
                yield inv.formula
            yield b
        case Assert(annot=a):
            yield a.formula
        case Quant(lo=lo, hi=hi, body=b):
            yield lo
            yield hi
            yield b
        case Forall(body=b) | Label(body=b):
            yield b


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order traversal."""
    stack = [e]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(reversed(list(children(node))))


def free_vars(e: Expr) -> set[Ident]:
    out: set[Ident] = set()

    def go(node, bound):
        match node:
            case Var(ident=i):
                if i not in bound:
                    out.add(i)
            case Let(ident=i, value=v, body=b):
                go(v, bound)
                go(b, bound | {i})
            case Quant(var=i, lo=lo, hi=hi, body=b):
                go(lo, bound)
                go(hi, bound)
                go(b, bound | {i})
            case Forall(vars=vs, body=b):
                go(b, bound | set(vs))
            case Assign(target=t, value=v):
                if t not in bound:
                    out.add(t)
                go(v, bound)
            case _:
                for c in children(node):
                    go(c, bound)

    go(e, frozenset())
    return out


def conj(parts) -> Expr:
    parts = [p for p in parts if p != TRUE]
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = Binop("and", out, p, loc=p.loc)
    return out


def flatten_conj(e: Expr) -> list[Expr]:
    if isinstance(e, Binop) and e.op == "and":
        return flatten_conj(e.left) + flatten_conj(e.right)
    if e == TRUE:
        return []
    return [e]


def strip_labels(e: Expr) -> Expr:
    """Drop Label wrappers, keeping their bodies."""
    return map_expr(e, lambda n: n.body if isinstance(n, Label) else n)


def map_expr(e: Expr, fn) -> Expr:
    """Rebuild ``e`` bottom-up, applying ``fn`` to every rebuilt node."""
    match e:
        case Binop(op, a, b, loc=loc):
            node = Binop(op, map_expr(a, fn), map_expr(b, fn), loc=loc)
        case Not(a, loc=loc):
            node = Not(map_expr(a, fn), loc=loc)
        case Neg(a, loc=loc):
            node = Neg(map_expr(a, fn), loc=loc)
        case Assign(t, v, loc=loc):
            node = Assign(t, map_expr(v, fn), loc=loc)
        case Let(i, m, v, b, ty, loc=loc):
            node = Let(i, m, map_expr(v, fn), map_expr(b, fn), ty, loc=loc)
        case Seq(a, b, loc=loc):
            node = Seq(map_expr(a, fn), map_expr(b, fn), loc=loc)
        case If(c, a, b, loc=loc):
            node = If(map_expr(c, fn), map_expr(a, fn), map_expr(b, fn), loc=loc)
        case Call(f, args, loc=loc):
            node = Call(f, tuple(map_expr(x, fn) for x in args), loc=loc)
        case While(c, invs, writes, b, loc=loc):
            invs = tuple(Annot(map_expr(a.formula, fn), a.label, loc=a.loc) for a in invs)
            node = While(map_expr(c, fn), invs, writes, map_expr(b, fn), loc=loc)
        case Assert(a, loc=loc):
            node = Assert(Annot(map_expr(a.formula, fn), a.label, loc=a.loc), loc=loc)
        case Quant(k, i, lo, hi, b, loc=loc):
            node = Quant(k, i, map_expr(lo, fn), map_expr(hi, fn), map_expr(b, fn), loc=loc)
        case Forall(vs, b, loc=loc):
            node = Forall(vs, map_expr(b, fn), loc=loc)
        case Label(k, src, b, loc=loc):
            node = Label(k, src, map_expr(b, fn), loc=loc)
        case _:
            node = e
    return fn(node)


def substitute(e: Expr, mapping: dict[Ident, Expr], result: Optional[Expr] = None) -> Expr:
    """Replace free variables (and optionally ``result``) in ``e``.

    Bound names are unique after resolution and fresh names never clash
    with program names, so no renaming is needed.
    """

    def go(node, bound):
        match node:
            case Var(ident=i):
                if i in mapping and i not in bound:
                    return mapping[i]
                return node
            case Result():
                return result if result is not None else node
            case Let(i, m, v, b, ty, loc=loc):
                return Let(i, m, go(v, bound), go(b, bound | {i}), ty, loc=loc)
            case Quant(k, i, lo, hi, b, loc=loc):
                return Quant(k, i, go(lo, bound), go(hi, bound), go(b, bound | {i}), loc=loc)
            case Forall(vs, b, loc=loc):
                return Forall(vs, go(b, bound | set(vs)), loc=loc)
            case Binop(op, a, b, loc=loc):
                return Binop(op, go(a, bound), go(b, bound), loc=loc)
            case Not(a, loc=loc):
                return Not(go(a, bound), loc=loc)
            case Neg(a, loc=loc):
                return Neg(go(a, bound), loc=loc)
            case Label(k, src, b, loc=loc):
                return Label(k, src, go(b, bound), loc=loc)
            case IntLit() | BoolLit() | UnitLit():
                return node
            case _:
                return _subst_code(node, go, bound)

    return go(e, frozenset())


def _subst_code(node, go, bound):
    # Substitution into program constructs; only used on small desugared
    # fragments.
    match node:
        case Assign(t, v, loc=loc):
            return Assign(t, go(v, bound), loc=loc)
        case Seq(a, b, loc=loc):
            return Seq(go(a, bound), go(b, bound), loc=loc)
        case If(c, a, b, loc=loc):
            return If(go(c, bound), go(a, bound), go(b, bound), loc=loc)
        case Call(f, args, loc=loc):
            return Call(f, tuple(go(x, bound) for x in args), loc=loc)
        case Assert(a, loc=loc):
            return Assert(Annot(go(a.formula, bound), a.label, loc=a.loc), loc=loc)
        case While(c, invs, w, b, loc=loc):
            invs = tuple(Annot(go(a.formula, bound), a.label, loc=a.loc) for a in invs)
            return While(go(c, bound), invs, w, go(b, bound), loc=loc)
    raise TypeError(f"cannot substitute into {type(node).__name__}")


def is_pure(e: Expr) -> bool:
    """True for side-effect-free terms that can be substituted into formulas."""
    match e:
        case IntLit() | BoolLit() | UnitLit() | Var() | Result():
            return True
        case Binop(left=a, right=b):
            return is_pure(a) and is_pure(b)
        case Not(operand=a) | Neg(operand=a):
            return is_pure(a)
        case Quant(lo=lo, hi=hi, body=b):
            return is_pure(lo) and is_pure(hi) and is_pure(b)
        case Label(body=b):
            return is_pure(b)
    return False
