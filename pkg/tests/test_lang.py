import pytest

from contracheck import load
from contracheck.errors import (
    ArityMismatch, AssignToImmutable, DuplicateDeclaration, TypeCheckError, UnboundVariable,
    WritesViolation,
)
from contracheck.parser import parse
from contracheck.resolve import resolve
from contracheck.syntax import (
    Ident, Program, SourceLoc, Type, Var, While, free_vars, substitute, walk, TRUE,
)
from contracheck.typecheck import check_types, typecheck

from helpers import PROGRAMS, load_file, source


def test_ident_validation():
    with pytest.raises(ValueError):
        Ident("")
    with pytest.raises(ValueError):
        Ident("1x")
    assert str(Ident("x'", 3)) == "x'"
    assert str(Ident("x", -2)) == "x!2"


def test_sourceloc_validation():
    with pytest.raises(ValueError):
        SourceLoc("f", 0, 1)
    with pytest.raises(ValueError):
        SourceLoc("f", 1, 0)


def test_toy_global_shared_by_both_functions():
    prog = resolve(parse(source("toy.mw")))
    x = prog.globals[0].ident
    for f in prog.functions:
        used = {n.ident for n in walk(f.body) if isinstance(n, Var)}
        assigned = {n.target for n in walk(f.body) if hasattr(n, "target")}
        assert x in used | assigned
    set_x = prog.function("set_x")
    assert set_x.writes == (x,)
    assert prog.function("main").writes == (x,)


def test_empty_program():
    assert resolve(parse("")) == Program()


def test_unbound_variable():
    with pytest.raises(UnboundVariable) as ex:
        resolve(parse("let f () : int =\n  w + 1"))
    assert (ex.value.loc.line, ex.value.loc.column) == (2, 3)


def test_assign_to_immutable():
    with pytest.raises(AssignToImmutable):
        resolve(parse("let f (n: int) : unit = n <- 1"))
    with pytest.raises(AssignToImmutable):
        resolve(parse("let f () : unit = let v = 1 in v <- 2"))


def test_arity_mismatch():
    with pytest.raises(ArityMismatch):
        resolve(parse("let g (a: int) : int = a let f () : int = g 1 2"))
    with pytest.raises(ArityMismatch):
        resolve(parse("let g (a: int) : int = a let f () : int = g"))


def test_duplicates():
    with pytest.raises(DuplicateDeclaration):
        resolve(parse("let f () : int = 1 let f () : int = 2"))
    with pytest.raises(DuplicateDeclaration):
        resolve(parse("let f (a: int) (a: int) : int = a"))


def test_explicit_writes_must_cover_assignments():
    with pytest.raises(WritesViolation):
        resolve(parse("let ref g = 0 let ref h = 0 let f () : unit writes { g } = h <- 1"))
    with pytest.raises(WritesViolation):
        resolve(parse("let ref g = 0 let f () : unit = let ref i = 0 in "
                      "while i < 2 writes { } do i <- i + 1 done"))


def test_writes_inferred_through_calls():
    prog = resolve(parse("let ref g = 0 let ref h = 0 "
                         "let a () : unit = g <- 1 "
                         "let b () : unit = a (); h <- 2 "
                         "let c () : unit = b ()"))
    g, h = (x.ident for x in prog.globals)
    assert prog.function("c").writes == (g, h)


def test_loop_writes_inferred_in_source_order():
    prog, _ = load_file("isqrt.mw")
    loop = next(n for n in walk(prog.functions[0].body) if isinstance(n, While))
    assert [v.name for v in loop.writes] == ["y", "z", "r"]


def test_shadowing_gets_distinct_ids():
    prog = resolve(parse("let f (a: int) : int = let a = a + 1 in a"))
    body = prog.functions[0].body
    param = prog.functions[0].params[0].ident
    assert body.ident != param
    assert body.value.left.ident == param
    assert body.body.ident == body.ident


@pytest.mark.parametrize("path", sorted(PROGRAMS.glob("*.mw")), ids=lambda p: p.name)
def test_resolve_idempotent(path):
    once = resolve(parse(path.read_text()))
    assert resolve(once) == once


def test_isqrt_typechecks_with_int_result():
    prog = resolve(parse(source("isqrt.mw")))
    assert typecheck(prog) == []
    assert check_types(prog).return_types["isqrt"] == Type.INT


@pytest.mark.parametrize("text", [
    "let f () : unit = assert { 1 + true }",
    "let f (n: int) : int ensures { result } = n",
    "let f (b: bool) : int = if b then 1 else false",
    "let f () : int = 1; 2",
    "let f (n: int) : bool = n",
])
def test_type_mismatch(text):
    prog = resolve(parse(text))
    errors = typecheck(prog)
    assert errors
    with pytest.raises(TypeCheckError):
        check_types(prog)


def test_return_type_inferred():
    _, info = load("let f (n: int) = n + 1 let g () = f 2 > 1")
    assert info.return_types == {"f": Type.INT, "g": Type.BOOL}


def test_recursive_function_needs_annotation():
    with pytest.raises(TypeCheckError):
        load("let rec f (n: int) = if n <= 0 then 0 else f (n - 1)")
    load("let rec f (n: int) : int = if n <= 0 then 0 else f (n - 1)")


@pytest.mark.parametrize("path", sorted(PROGRAMS.glob("*.mw")), ids=lambda p: p.name)
def test_corpus_is_well_typed(path):
    load(path.read_text(), path.name)


def test_substitute_respects_binders():
    e = parse("let f (n: int) ensures { forall i in 0 .. n. i < n } = n").functions[0].post[0].formula
    n = Ident("n")
    out = substitute(e, {n: Var(Ident("m")), Ident("i"): TRUE})
    assert free_vars(out) == {Ident("m")}
