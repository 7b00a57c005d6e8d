import itertools
import random

import pytest

from contracheck.finder import solve_builtin, spiral
from contracheck.rac import RuntimeGuard, eval_formula
from contracheck.smtlib import emit_query, parse_output, read_sexprs, solve_external
from contracheck.solver import (
    Sat, SolverError, Timeout, Unknown, Unsat, model_env, model_to_ce, symbols,
)
from contracheck.syntax import (
    Binop, Ident, IntLit, Not, Quant, SourceLoc, Type, Var, TRUE, FALSE,
)
from contracheck.vcgen import Goal, VarBinding, split

from helpers import PROGRAMS, Z3_COMMAND, goal, goals_of, load_file, needs_z3

LOC = SourceLoc("t.mw", 1, 1)


def make_goal(premises, conclusion, names, types=None):
    types = types or {}
    var_map = tuple(VarBinding(Ident(n, i + 1), Ident(n, i + 1), LOC, types.get(n, Type.INT))
                    for i, n in enumerate(names))
    return Goal("t/goal", "t", None, LOC, tuple(premises), conclusion, var_map)


def var(goal_, name):
    return Var(next(b.logical for b in goal_.var_map if b.logical.name == name))


def toy_goal():
    _, _, goals = goals_of("toy.mw", "main")
    return goal(goals, "main/assert")


# -- emission ---------------------------------------------------------------

def test_emit_toy_query():
    script = emit_query(toy_goal())
    assert script.splitlines() == [
        "(set-option :produce-models true)",
        "(set-logic ALL)",
        "(declare-const x Int)",
        "(declare-const x!1 Int)",
        "(assert (> x!1 2))",
        "(assert (not (= x!1 3)))",
        "(check-sat)",
        "(get-model)",
    ]


def test_emit_true_conclusion_asserts_false():
    g = make_goal([], TRUE, [])
    assert "(assert false)" in emit_query(g).splitlines()


def test_emit_premise_free_goal():
    g = make_goal([], None, ["n"])
    n = var(g, "n")
    g = make_goal([], Binop(">", Binop("+", n, IntLit(1)), n), ["n"])
    assert "(assert (not (> (+ n 1) n)))" in emit_query(g)


def test_emit_negative_literals_and_quoting():
    g = make_goal([], None, ["y'"])
    y = var(g, "y'")
    g = make_goal([Binop("=", y, IntLit(-3))], Binop("<>", y, IntLit(0)), ["y'"])
    script = emit_query(g)
    assert "(declare-const |y'| Int)" in script
    assert "(assert (= |y'| (- 3)))" in script
    assert "(assert (not (distinct |y'| 0)))" in script


def test_symbols_disambiguate_clashes():
    var_map = (VarBinding(Ident("a", 1), Ident("a", 1), LOC, Type.INT),
               VarBinding(Ident("a", 2), Ident("a", 2), LOC, Type.INT),
               VarBinding(Ident("a", -1), Ident("a", 1), LOC, Type.INT),
               VarBinding(Ident("div", 3), Ident("div", 3), LOC, Type.BOOL))
    g = Goal("g", "f", None, LOC, (), TRUE, var_map)
    assert list(symbols(g).values()) == ["a!v1", "a!v2", "a!1", "|div|"]


def test_variable_range_stays_quantified():
    _, _, goals = goals_of("bounds.mw", "all_below")
    script = emit_query(goal(goals, "all_below/assert"))
    assert "(exists ((j!q" in script


def test_emit_expands_constant_ranges():
    i = Ident("i", 9)
    q = Quant("forall", i, IntLit(0), IntLit(3), Binop("<", Var(i), IntLit(5)))
    script = emit_query(make_goal([], q, []))
    assert "(assert (not (and (< 0 5) (< 1 5) (< 2 5))))" in script
    empty = Quant("forall", i, IntLit(0), IntLit(0), FALSE)
    assert "(assert (not true))" in emit_query(make_goal([], empty, []))


def test_emission_is_deterministic():
    for path in sorted(PROGRAMS.glob("*.mw")):
        prog, info = load_file(path.name)
        for f in prog.functions:
            if f.body is None:
                continue
            prog2, info2 = load_file(path.name)
            a = [emit_query(g) for g in split(prog, f, info)]
            b = [emit_query(g) for g in split(prog2, prog2.function(f.name.name), info2)]
            assert a == b


# -- output parsing ---------------------------------------------------------

def test_read_sexprs():
    assert read_sexprs('sat (model (define-fun |a b| () Int (- 4)))') == [
        "sat", ["model", ["define-fun", "|a b|", [], "Int", ["-", "4"]]]]
    with pytest.raises(ValueError):
        read_sexprs("(a")


@pytest.mark.parametrize("text,expected", [
    ("unsat\n(error \"line 7: model is not available\")\n", Unsat()),
    ("sat\n(\n  (define-fun x () Int 0)\n  (define-fun |x!1| () Int 4)\n)\n",
     Sat({"x": 0, "x!1": 4})),
    ("sat\n(model (define-fun b () Bool true) (define-fun y () Int (- 12)))\n",
     Sat({"b": True, "y": -12})),
    ("unknown\n(error \"no model\")\n", Unknown(None)),
    ("unknown\n((define-fun r () Int 3))\n", Unknown({"r": 3})),
    ("timeout\n", Timeout()),
])
def test_parse_output(text, expected):
    assert parse_output(text) == expected


def test_parse_output_errors():
    assert isinstance(parse_output("(error \"bad\")\n", 1), SolverError)
    assert isinstance(parse_output("", 3), SolverError)
    assert isinstance(parse_output("garbage", 0), SolverError)


def test_time_limit_zero_is_timeout():
    assert solve_external("(check-sat)\n", Z3_COMMAND, 0) == Timeout()


def test_missing_solver_executable():
    v = solve_external("(check-sat)\n", "no-such-solver-binary {file}", 5)
    assert isinstance(v, SolverError)


@needs_z3
def test_external_toy():
    v = solve_external(emit_query(toy_goal()), Z3_COMMAND, 10)
    assert isinstance(v, Sat)
    assert v.model["x!1"] > 2 and v.model["x!1"] != 3


@needs_z3
def test_external_file_placeholder():
    assert solve_external("(assert false)\n(check-sat)\n", "z3 -smt2 {file}", 10) == Unsat()


@needs_z3
def test_external_assert_false():
    assert solve_external("(assert false)\n(check-sat)\n(get-model)\n", Z3_COMMAND, 10) == Unsat()


@needs_z3
def test_external_premise_free_unsat():
    g = make_goal([], None, ["n"])
    n = var(g, "n")
    g = make_goal([], Binop(">", Binop("+", n, IntLit(1)), n), ["n"])
    assert solve_external(emit_query(g), Z3_COMMAND, 10) == Unsat()


# -- builtin finder ---------------------------------------------------------

def test_spiral_order():
    assert spiral(2) == (0, 1, -1, 2, -2)
    assert spiral(0) == (0,)


@pytest.mark.parametrize("bound", [5, 10, 32])
def test_builtin_toy(bound):
    v = solve_builtin(toy_goal(), bound)
    assert v == Sat({"x": 0, "x!1": 4})


def test_builtin_toy_below_needed_bound():
    assert solve_builtin(toy_goal(), 3) == Unknown(None)


def test_builtin_decided_unsat():
    # premises-free query not (0 = 0): no assignment and nothing to enumerate
    g = make_goal([], Binop("=", IntLit(0), IntLit(0)), [])
    assert solve_builtin(g, 4) == Unsat()


def test_builtin_bounded_by_premises_is_unsat():
    g = make_goal([], None, ["a"])
    a = var(g, "a")
    g = make_goal([Binop("<=", IntLit(-3), a), Binop("<=", a, IntLit(3))],
                  Binop("<", Binop("*", a, a), IntLit(10)), ["a"])
    assert solve_builtin(g, 3) == Unsat()
    assert solve_builtin(g, 2) == Unknown(None)


def test_builtin_isqrt_without_i3():
    prog, _, goals = goals_of("isqrt_mut2.mw", "isqrt")
    v = solve_builtin(goal(goals, "isqrt/post"), 10)
    assert v == Sat({"n": 1, "y!1": 0, "z!2": 1, "r!3": 0})


def test_builtin_booleans_and_unused_variables():
    g = make_goal([], None, ["p", "q", "k"], {"p": Type.BOOL, "q": Type.BOOL})
    p, q = var(g, "p"), var(g, "q")
    g = make_goal([p], q, ["p", "q", "k"], {"p": Type.BOOL, "q": Type.BOOL})
    assert solve_builtin(g, 3) == Sat({"p": True, "q": False, "k": 0})


def test_builtin_division_by_zero_rejects_assignment():
    g = make_goal([], None, ["a"])
    a = var(g, "a")
    g = make_goal([Binop("<=", IntLit(-1), a), Binop("<=", a, IntLit(1))],
                  Binop("<>", Binop("div", IntLit(6), a), IntLit(6)), ["a"])
    assert solve_builtin(g, 2) == Sat({"a": 1})


def test_builtin_equality_pins_value_beyond_bound():
    g = make_goal([], None, ["a", "b"])
    a, b = var(g, "a"), var(g, "b")
    g = make_goal([Binop("<=", IntLit(0), a), Binop("<=", a, IntLit(3)),
                   Binop("=", b, Binop("*", a, IntLit(100)))],
                  Binop("<", b, IntLit(250)), ["a", "b"])
    assert solve_builtin(g, 3) == Sat({"a": 3, "b": 300})


def test_builtin_is_deterministic():
    for path in sorted(PROGRAMS.glob("*.mw")):
        prog, info = load_file(path.name)
        for f in prog.functions:
            if f.body is None:
                continue
            goals = split(prog, f, info)
            assert [solve_builtin(g, 6) for g in goals] == [solve_builtin(g, 6) for g in goals]


def test_negative_bound_rejected():
    with pytest.raises(ValueError):
        solve_builtin(toy_goal(), -1)


# -- negation duality on random quantifier-free goals ------------------------

def random_term(rng, vs, depth):
    if depth == 0 or rng.random() < 0.3:
        return rng.choice([IntLit(rng.randint(-3, 3))] + vs)
    op = rng.choice(["+", "-", "*", "div", "mod"])
    return Binop(op, random_term(rng, vs, depth - 1), random_term(rng, vs, depth - 1))


def random_formula(rng, vs, depth):
    if depth == 0 or rng.random() < 0.3:
        op = rng.choice(["=", "<>", "<", "<=", ">", ">="])
        return Binop(op, random_term(rng, vs, 2), random_term(rng, vs, 2))
    c = rng.choice(["and", "or", "->", "not"])
    if c == "not":
        return Not(random_formula(rng, vs, depth - 1))
    return Binop(c, random_formula(rng, vs, depth - 1), random_formula(rng, vs, depth - 1))


def falsifiable(g, bound):
    names = [b.logical for b in g.var_map]
    for values in itertools.product(range(-bound, bound + 1), repeat=len(names)):
        env = dict(zip(names, values))
        try:
            if all(eval_formula(p, env) for p in g.premises) and not eval_formula(g.conclusion, env):
                return True
        except RuntimeGuard:
            continue
    return False


def test_negation_duality():
    rng = random.Random(7)
    bound = 3
    for _ in range(200):
        g0 = make_goal([], TRUE, ["a", "b"])
        vs = [var(g0, "a"), var(g0, "b")]
        box = [Binop("<=", IntLit(-bound), v) for v in vs] + [Binop("<=", v, IntLit(bound)) for v in vs]
        g = make_goal(box + [random_formula(rng, vs, 2)], random_formula(rng, vs, 2), ["a", "b"])
        v = solve_builtin(g, bound)
        assert isinstance(v, (Sat, Unsat))
        assert isinstance(v, Sat) == falsifiable(g, bound)


# -- model conversion ---------------------------------------------------------

def test_model_to_ce_toy():
    prog, _, goals = goals_of("toy.mw", "main")
    g = goal(goals, "main/assert")
    ce = model_to_ce({"x": 0, "x!1": 4}, g)
    x = prog.globals[0].ident
    main = prog.function("main")
    call_site = goal(goals, "main/pre").kind.call_site
    assert [(t.var, t.loc, t.value) for t in ce.triples] == [(x, main.loc, 0), (x, call_site, 4)]
    assert ce.complete and ce.origin == g.id


def test_model_to_ce_empty():
    ce = model_to_ce({}, make_goal([], TRUE, []))
    assert ce.triples == () and ce.complete


def test_model_to_ce_incomplete():
    ce = model_to_ce({"x!1": 4}, toy_goal())
    assert not ce.complete and len(ce.triples) == 1


def test_model_env_unquotes():
    g = make_goal([], TRUE, ["y'"])
    assert model_env({"|y'|": 2}, g) == {g.var_map[0].logical: 2}


# -- agreement with an external solver ----------------------------------------

def corpus_goals():
    for path in sorted(PROGRAMS.glob("*.mw")):
        prog, info = load_file(path.name)
        for f in prog.functions:
            if f.body is not None:
                yield from split(prog, f, info)


@needs_z3
def test_external_and_builtin_agree():
    for g in corpus_goals():
        a = solve_builtin(g, 8)
        b = solve_external(emit_query(g), Z3_COMMAND, 10)
        if isinstance(a, (Sat, Unsat)) and isinstance(b, (Sat, Unsat)):
            assert type(a) is type(b), g.id
