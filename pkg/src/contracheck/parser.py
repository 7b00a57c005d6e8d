"""Lexer and recursive-descent parser for the ``.mw`` surface syntax.

The grammar stays close to WhyML listings::

    let ref x : int = 0

    let set_x (n: int) : unit ensures { x > n } =
      x <- n + 1

    let isqrt (n: int) requires { 0 <= n <= 10000 } ... =
      let ref r = n in
      while y > n do
        invariant I1 { 0 <= r <= n }
        ...
      done;
      r
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .errors import LexError, ParseError
from .syntax import (
    Annot, Assert, Assign, Binop, BoolLit, Call, Expr, FunctionDecl, Global,
    Ident, If, IntLit, Let, Neg, Not, Param, Program, Quant, Result, Seq,
    SourceLoc, Type, UnitLit, Var, While,
)

KEYWORDS = frozenset("""
    let ref rec in val if then else while do done invariant writes requires
    ensures assert begin end true false not result forall exists div mod
    int bool unit
""".split())

# Longest match first.
OPERATORS = ("<-", "->", "<=", ">=", "<>", "!=", "&&", "||", "/\\", "\\/", "..",
             "+", "-", "*", "/", "%", "=", "<", ">")
PUNCTUATION = ("(", ")", "{", "}", ":", ";", ",", ".")

_CANONICAL = {"&&": "and", "/\\": "and", "||": "or", "\\/": "or", "!=": "<>",
              "/": "div", "%": "mod"}

_IDENT = re.compile(r"[a-zA-Z_][a-zA-Z0-9_']*")
_INT = re.compile(r"[0-9]+")
_SPACE = re.compile(r"[ \t\r\n]+")


@dataclass(frozen=True)
class Token:
    kind: str  # keyword | ident | int | op | punct | eof
    lexeme: str
    loc: SourceLoc
    offset: int = 0

    def is_(self, *lexemes: str) -> bool:
        return self.kind in ("keyword", "op", "punct") and self.lexeme in lexemes


def tokenize(source: str, file: str = "<input>") -> list[Token]:
    """Split ``source`` into tokens; comments ``(* ... *)`` nest and are skipped."""
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    n = len(source)

    def loc_at(p):
        return SourceLoc(file, line, p - line_start + 1)

    def advance_to(p):
        nonlocal pos, line, line_start
        chunk = source[pos:p]
        nl = chunk.count("\n")
        if nl:
            line += nl
            line_start = pos + chunk.rindex("\n") + 1
        pos = p

    while pos < n:
        m = _SPACE.match(source, pos)
        if m:
            advance_to(m.end())
            continue
        if source.startswith("(*", pos):
            start = loc_at(pos)
            depth, p = 0, pos
            while p < n:
                if source.startswith("(*", p):
                    depth += 1
                    p += 2
                elif source.startswith("*)", p):
                    depth -= 1
                    p += 2
                    if depth == 0:
                        break
                else:
                    p += 1
            if depth:
                raise LexError(start, "unterminated comment")
            advance_to(p)
            continue
        loc = loc_at(pos)
        m = _IDENT.match(source, pos)
        if m:
            word = m.group()
            tokens.append(Token("keyword" if word in KEYWORDS else "ident", word, loc, pos))
            advance_to(m.end())
            continue
        m = _INT.match(source, pos)
        if m:
            if _IDENT.match(source, m.end()):
                raise LexError(loc, f"malformed number {source[pos:m.end() + 1]!r}")
            tokens.append(Token("int", m.group(), loc, pos))
            advance_to(m.end())
            continue
        for op in OPERATORS:
            if source.startswith(op, pos):
                tokens.append(Token("op", op, loc, pos))
                advance_to(pos + len(op))
                break
        else:
            ch = source[pos]
            if ch in PUNCTUATION:
                tokens.append(Token("punct", ch, loc, pos))
                advance_to(pos + 1)
            else:
                raise LexError(loc, f"illegal character {ch!r}")
    return tokens


_CMP = ("=", "<>", "!=", "<", "<=", ">", ">=")
_TYPES = {"int": Type.INT, "bool": Type.BOOL, "unit": Type.UNIT}


class Parser:
    def __init__(self, source: str, file: str = "<input>"):
        self.file = file
        self.tokens = tokenize(source, file)
        self.pos = 0
        self.in_formula = False
        self.in_post = False
        if self.tokens:
            last = self.tokens[-1]
            end = SourceLoc(file, last.loc.line, last.loc.column + len(last.lexeme))
        else:
            end = SourceLoc(file, 1, 1)
        self.eof = Token("eof", "<end of input>", end, len(source))

    # -- token helpers ----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else self.eof

    def peek(self, k: int = 1) -> Token:
        i = self.pos + k
        return self.tokens[i] if i < len(self.tokens) else self.eof

    def next(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def accept(self, *lexemes: str) -> Optional[Token]:
        if self.tok.is_(*lexemes):
            return self.next()
        return None

    def expect(self, *lexemes: str) -> Token:
        if self.tok.is_(*lexemes):
            return self.next()
        raise ParseError(self.tok.loc, {repr(x) for x in lexemes})

    def ident(self) -> tuple[Ident, SourceLoc]:
        t = self.tok
        if t.kind != "ident":
            raise ParseError(t.loc, {"identifier"})
        self.next()
        return Ident(t.lexeme), t.loc

    def type_(self) -> Type:
        t = self.tok
        if t.kind == "keyword" and t.lexeme in _TYPES:
            self.next()
            return _TYPES[t.lexeme]
        raise ParseError(t.loc, {"int", "bool", "unit"})

    # -- declarations -----------------------------------------------------

    def program(self) -> Program:
        globals_, functions = [], []
        while self.tok.kind != "eof":
            start = self.tok
            if start.is_("let") and self.peek().is_("ref"):
                self.next()
                self.next()
                name, _ = self.ident()
                ty = self.type_() if self.accept(":") else None
                self.expect("=")
                globals_.append(Global(name, ty, self.stmt(), loc=start.loc))
            elif start.is_("val") and self.peek().is_("ref"):
                self.next()
                self.next()
                name, _ = self.ident()
                self.expect(":")
                globals_.append(Global(name, self.type_(), None, loc=start.loc))
            elif start.is_("let", "val"):
                functions.append(self.function())
            else:
                raise ParseError(start.loc, {"'let'", "'val'"})
        return Program(tuple(globals_), tuple(functions))

    def function(self) -> FunctionDecl:
        start = self.next()
        abstract = start.lexeme == "val"
        if not abstract:
            self.accept("rec")
        name, _ = self.ident()
        params = []
        if self.tok.is_("(") and self.peek().is_(")"):
            self.next()
            self.next()
        else:
            self.expect("(")
            while True:
                pname, _ = self.ident()
                self.expect(":")
                params.append(Param(pname, self.type_()))
                self.expect(")")
                if not self.accept("("):
                    break
        ret = self.type_() if self.accept(":") else None
        pre, post, writes = [], [], None
        while self.tok.is_("requires", "ensures", "writes"):
            kw = self.next().lexeme
            if kw == "requires":
                pre.append(self.annot())
            elif kw == "ensures":
                self.in_post = True
                try:
                    post.append(self.annot())
                finally:
                    self.in_post = False
            else:
                writes = (writes or ()) + self.ident_list()
        body = None
        if not abstract:
            if not self.accept("="):
                if self.tok.kind == "eof" or self.tok.is_("let", "val"):
                    raise ParseError(self.tok.loc, {"'='"})
            body = self.seq()
        return FunctionDecl(name, tuple(params), ret, tuple(pre), tuple(post),
                            writes, body, loc=start.loc)

    def ident_list(self) -> tuple[Ident, ...]:
        self.expect("{")
        out = []
        if not self.tok.is_("}"):
            out.append(self.ident()[0])
            while self.accept(","):
                out.append(self.ident()[0])
        self.expect("}")
        return tuple(out)

    def annot(self, label: Optional[str] = None) -> Annot:
        self.expect("{")
        loc = self.tok.loc
        saved = self.in_formula
        self.in_formula = True
        try:
            f = self.formula()
        finally:
            self.in_formula = saved
        self.expect("}")
        return Annot(f, label, loc=loc)

    # -- expressions ------------------------------------------------------

    def starts_expr(self) -> bool:
        t = self.tok
        if t.kind in ("ident", "int"):
            return True
        return t.is_("let", "if", "while", "assert", "begin", "true", "false",
                     "not", "result", "forall", "exists", "(", "-")

    def seq(self) -> Expr:
        first = self.stmt()
        semi = self.accept(";")
        if semi is None:
            return first
        return Seq(first, self.seq(), loc=semi.loc)

    def stmt(self) -> Expr:
        t = self.tok
        if t.is_("let"):
            return self.let()
        if t.is_("if"):
            self.next()
            cond = self.seq()
            self.expect("then")
            then = self.stmt()
            orelse = self.stmt() if self.accept("else") else UnitLit(loc=t.loc)
            return If(cond, then, orelse, loc=t.loc)
        if t.kind == "ident" and self.peek().is_("<-"):
            if self.in_formula:
                raise ParseError(self.peek().loc, {"formula"}, "assignment inside annotation")
            self.next()
            self.next()
            return Assign(Ident(t.lexeme), self.stmt(), loc=t.loc)
        return self.formula()

    def let(self) -> Expr:
        start = self.expect("let")
        if self.in_formula:
            raise ParseError(start.loc, {"formula"}, "let inside annotation")
        mutable = self.accept("ref") is not None
        name, _ = self.ident()
        ty = self.type_() if self.accept(":") else None
        self.expect("=")
        value = self.stmt()
        self.expect("in")
        return Let(name, mutable, value, self.seq(), ty, loc=start.loc)

    def quantifier(self) -> Expr:
        t = self.next()
        var, _ = self.ident()
        if not self.tok.is_("in"):
            raise ParseError(self.tok.loc, {"'in'"}, "unbounded quantifiers are not supported; "
                             "write 'forall i in lo .. hi. ...'")
        self.next()
        lo = self.arith()
        self.expect("..")
        hi = self.arith()
        self.expect(".")
        return Quant(t.lexeme, var, lo, hi, self.formula(), loc=t.loc)

    def formula(self) -> Expr:
        if self.in_formula and self.tok.is_("forall", "exists"):
            return self.quantifier()
        left = self.disj()
        arrow = self.tok
        if arrow.is_("->"):
            if not self.in_formula:
                raise ParseError(arrow.loc, {"expression"}, "implication outside annotation")
            self.next()
            return Binop("->", left, self.formula(), loc=arrow.loc)
        return left

    def disj(self) -> Expr:
        left = self.conj()
        while self.tok.is_("||", "\\/"):
            op = self.next()
            left = Binop("or", left, self.conj(), loc=op.loc)
        return left

    def conj(self) -> Expr:
        left = self.negation()
        while self.tok.is_("&&", "/\\"):
            op = self.next()
            left = Binop("and", left, self.negation(), loc=op.loc)
        return left

    def negation(self) -> Expr:
        t = self.tok
        if t.is_("not"):
            self.next()
            return Not(self.negation(), loc=t.loc)
        if self.in_formula and t.is_("forall", "exists"):
            return self.quantifier()
        return self.comparison()

    def comparison(self) -> Expr:
        operands = [self.arith()]
        ops = []
        while self.tok.is_(*_CMP):
            ops.append(self.next())
            operands.append(self.arith())
        if not ops:
            return operands[0]
        # Chains like a <= b < c mean a <= b /\ b < c.
        result = None
        for i, op in enumerate(ops):
            c = Binop(_CANONICAL.get(op.lexeme, op.lexeme), operands[i], operands[i + 1], loc=op.loc)
            result = c if result is None else Binop("and", result, c, loc=op.loc)
        return result

    def arith(self) -> Expr:
        left = self.term()
        while self.tok.is_("+", "-"):
            op = self.next()
            left = Binop(op.lexeme, left, self.term(), loc=op.loc)
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.tok.is_("*", "/", "%", "div", "mod"):
            op = self.next()
            left = Binop(_CANONICAL.get(op.lexeme, op.lexeme), left, self.unary(), loc=op.loc)
        return left

    def unary(self) -> Expr:
        t = self.tok
        if t.is_("-"):
            self.next()
            if self.tok.kind == "int":
                return IntLit(-int(self.next().lexeme), loc=t.loc)
            return Neg(self.unary(), loc=t.loc)
        return self.application()

    def starts_arg(self) -> bool:
        t = self.tok
        return t.kind in ("ident", "int") or t.is_("true", "false", "(", "result", "begin")

    def application(self) -> Expr:
        t = self.tok
        if t.kind == "ident" and not self.peek().is_("<-"):
            self.next()
            if not self.starts_arg():
                return Var(Ident(t.lexeme), loc=t.loc)
            args = []
            if self.tok.is_("(") and self.peek().is_(")"):
                self.next()
                self.next()
            else:
                while self.starts_arg():
                    args.append(self.atom())
            return Call(Ident(t.lexeme), tuple(args), loc=t.loc)
        return self.atom()

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "int":
            self.next()
            return IntLit(int(t.lexeme), loc=t.loc)
        if t.kind == "ident":
            self.next()
            return Var(Ident(t.lexeme), loc=t.loc)
        if t.is_("true", "false"):
            self.next()
            return BoolLit(t.lexeme == "true", loc=t.loc)
        if t.is_("result"):
            self.next()
            if not self.in_post:
                raise ParseError(t.loc, {"expression"}, "'result' is only allowed in ensures clauses")
            return Result(loc=t.loc)
        if t.is_("("):
            self.next()
            if self.accept(")"):
                return UnitLit(loc=t.loc)
            inner = self.formula() if self.in_formula else self.seq()
            self.expect(")")
            return inner
        if t.is_("begin"):
            self.next()
            inner = self.seq()
            self.expect("end")
            return inner
        if t.is_("assert"):
            self.next()
            return Assert(self.annot(), loc=t.loc)
        if t.is_("while"):
            return self.while_()
        raise ParseError(t.loc, {"expression"})

    def while_(self) -> Expr:
        start = self.expect("while")
        if self.in_formula:
            raise ParseError(start.loc, {"formula"}, "loop inside annotation")
        cond = self.seq()
        invariants, writes = [], None

        def clauses():
            nonlocal writes
            while self.tok.is_("invariant", "writes"):
                if self.next().lexeme == "invariant":
                    label = None
                    if self.tok.kind == "ident":
                        label = self.next().lexeme
                    invariants.append(self.annot(label))
                else:
                    writes = (writes or ()) + self.ident_list()

        clauses()
        self.expect("do")
        clauses()
        body = self.seq()
        self.expect("done")
        return While(cond, tuple(invariants), writes, body, loc=start.loc)


def parse(source: str, file: str = "<input>") -> Program:
    """Parse a whole ``.mw`` source text into an unresolved Program."""
    return Parser(source, file).program()


def parse_expr(source: str, file: str = "<input>", formula: bool = False) -> Expr:
    p = Parser(source, file)
    p.in_formula = p.in_post = formula
    e = p.formula() if formula else p.seq()
    if p.tok.kind != "eof":
        raise ParseError(p.tok.loc, {"end of input"})
    return e
