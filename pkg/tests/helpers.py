"""Shared helpers for the test suite."""
from __future__ import annotations

import shutil
from pathlib import Path

import pytest

from contracheck import load
from contracheck.counterexample import CandidateCounterexample
from contracheck.syntax import Ident, Program
from contracheck.vcgen import split

PROGRAMS = Path(__file__).parent / "programs"

Z3 = shutil.which("z3")
needs_z3 = pytest.mark.skipif(Z3 is None, reason="z3 executable not installed")
Z3_COMMAND = "z3 -in"


def source(name: str) -> str:
    return (PROGRAMS / name).read_text()


def load_file(name: str):
    """Program and type info for ``tests/programs/<name>``."""
    return load(source(name), name)


def fn(program: Program, name: str):
    return program.function(name)


def goals_of(name: str, function: str):
    program, info = load_file(name)
    return program, info, split(program, fn(program, function), info)


def goal(goals, prefix: str):
    """The single goal whose id starts with ``prefix``."""
    found = [g for g in goals if g.id.startswith(prefix)]
    assert len(found) == 1, [g.id for g in goals]
    return found[0]


def ident(program: Program, name: str) -> Ident:
    """Resolved ident of a parameter or global called ``name``."""
    for g in program.globals:
        if g.ident.name == name:
            return g.ident
    for f in program.functions:
        for p in f.params:
            if p.ident.name == name:
                return p.ident
    raise KeyError(name)


def entry_ce(program: Program, function: str, **values) -> CandidateCounterexample:
    """Counterexample holding only entry values of ``function``."""
    f = program.function(function)
    names = [p.ident for p in f.params] + [g.ident for g in program.globals]
    by_name = {i.name: i for i in names}
    return CandidateCounterexample.from_values(
        [(by_name[k], f.loc, v) for k, v in values.items()])
