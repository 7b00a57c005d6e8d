"""Command line driver: ``contracheck verify <files>``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from . import __version__, load
from .categorise import categorize
from .errors import ContracheckError
from .finder import DEFAULT_BOUND, solve_builtin
from .rac import DEFAULT_FUEL, Oracle, exec_giant, exec_standard
from .report import GoalResult, build_report, dumps, render_text
from .smtlib import emit_query, solve_external
from .solver import SolverVerdict, model_to_ce, verdict_model
from .syntax import FunctionDecl, Program
from .typecheck import TypeInfo
from .vcgen import Goal, split

log = logging.getLogger("contracheck")

BUILTIN = "builtin"


@dataclass
class RunConfig:
    paths: list[str] = field(default_factory=list)
    solver: str = BUILTIN
    timeout: float = 10.0
    bound: int = DEFAULT_BOUND
    fuel: int = DEFAULT_FUEL
    format: str = "text"
    trace: bool = False
    jobs: Optional[int] = None
    verbose: int = 0

    def validate(self) -> None:
        if self.bound < 0:
            raise ValueError("--bound must be non-negative")
        if self.fuel < 1:
            raise ValueError("--fuel must be at least 1")
        if self.timeout < 0:
            raise ValueError("--timeout must be non-negative")
        if self.format not in ("text", "json"):
            raise ValueError("--format must be text or json")
        if self.jobs is not None and self.jobs < 1:
            raise ValueError("--jobs must be at least 1")
        if not self.solver.strip():
            raise ValueError("--solver must be 'builtin' or a command line")


def discharge(goal: Goal, config: RunConfig) -> SolverVerdict:
    if config.solver == BUILTIN:
        return solve_builtin(goal, config.bound)
    return solve_external(emit_query(goal), config.solver, config.timeout)


def check_goal(program: Program, info: TypeInfo, f: FunctionDecl, goal: Goal,
               config: RunConfig) -> GoalResult:
    """Solve one goal and, if a model comes back, categorise its counterexample."""
    answer = discharge(goal, config)
    model = verdict_model(answer)
    if model is None:
        return GoalResult(goal, answer)
    ce = model_to_ce(model, goal)
    traces: dict[str, list[str]] = {"standard": [], "giant-step": []}
    std = exec_standard(program, f, ce, config.fuel, info,
                        traces["standard"].append if config.trace else None)
    giant = exec_giant(program, f, Oracle(ce), config.fuel, info,
                       traces["giant-step"].append if config.trace else None)
    verdict = categorize(goal, ce, std, giant)
    log.info("%s: %s", goal.id, verdict)
    return GoalResult(goal, answer, verdict, traces if config.trace else {})


def run(config: RunConfig) -> tuple[dict, int]:
    """Verify every function of every input file; return the report and exit code.

    Raises OSError and ContracheckError for unreadable or ill-formed input.
    """
    config.validate()
    start = time.monotonic()
    units = []
    for path in config.paths:
        with open(path, encoding="utf-8") as fh:
            source = fh.read()
        program, info = load(source, path)
        for f in program.functions:
            if f.body is not None:
                units.append((path, program, info, f, split(program, f, info)))

    tasks = [(program, info, f, g, config) for _, program, info, f, goals in units for g in goals]
    with ThreadPoolExecutor(max_workers=config.jobs or os.cpu_count() or 1) as pool:
        results = iter(list(pool.map(lambda t: check_goal(*t), tasks)))

    functions = []
    for path, _, _, f, goals in units:
        functions.append((path, f.name.name, [next(results) for _ in goals]))
    meta = {
        "tool": f"contracheck {__version__}",
        "solver": config.solver,
        "timeout": config.timeout,
        "bound": config.bound,
        "fuel": config.fuel,
        "wall_time": round(time.monotonic() - start, 3),
    }
    report = build_report(config.paths, functions, meta)
    proved = all(g["status"] == "proved" for fn in report["functions"] for g in fn["goals"])
    return report, 0 if proved else 1


# --------------------------------------------------------------------------
# Argument handling


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="contracheck",
                                description="Verify annotated programs and categorise counterexamples.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="verify source files")
    v.add_argument("paths", nargs="+", metavar="FILE")
    v.add_argument("--config", metavar="JSON", help="read defaults for the options below from a JSON file")
    v.add_argument("--solver", help="'builtin' (default) or an SMT-LIB solver command line; "
                                     "{file} is replaced by the query file, otherwise the query goes to stdin")
    v.add_argument("--timeout", type=float, help="solver time limit in seconds (default 10)")
    v.add_argument("--bound", type=int, help=f"value bound of the builtin finder (default {DEFAULT_BOUND})")
    v.add_argument("--fuel", type=int, help=f"execution step budget (default {DEFAULT_FUEL})")
    v.add_argument("--format", choices=["text", "json"], help="report format (default text)")
    v.add_argument("--trace", action="store_true", default=None, help="include execution traces")
    v.add_argument("--jobs", type=int, help="number of goals checked in parallel (default: CPU count)")
    v.add_argument("-v", "--verbose", action="count", default=0)
    return p


_CONFIG_TYPES = {"solver": (str,), "timeout": (int, float), "bound": (int,), "fuel": (int,),
                 "format": (str,), "trace": (bool,), "jobs": (int, type(None))}
_CONFIG_KEYS = set(_CONFIG_TYPES)


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"{args.config}: expected a JSON object")
        unknown = set(data) - _CONFIG_KEYS
        if unknown:
            raise ValueError(f"{args.config}: unknown option(s) {', '.join(sorted(unknown))}")
        for key, value in data.items():
            if not isinstance(value, _CONFIG_TYPES[key]) or (
                    isinstance(value, bool) and bool not in _CONFIG_TYPES[key]):
                raise ValueError(f"{args.config}: bad value {value!r} for {key}")
        values.update(data)
    for key in _CONFIG_KEYS:
        if getattr(args, key) is not None:
            values[key] = getattr(args, key)
    defaults = asdict(RunConfig())
    cfg = RunConfig(paths=list(args.paths), verbose=args.verbose,
                    **{k: values.get(k, defaults[k]) for k in _CONFIG_KEYS})
    cfg.validate()
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s: %(message)s")
    try:
        config = config_from_args(args)
    except ValueError as ex:
        print(f"contracheck: {ex}", file=sys.stderr)
        return 2
    except OSError as ex:
        print(f"contracheck: {ex.filename or ''}: {ex.strerror or ex}", file=sys.stderr)
        return 2
    try:
        report, code = run(config)
    except OSError as ex:
        print(f"contracheck: {ex.filename or ''}: {ex.strerror or ex}", file=sys.stderr)
        return 2
    except (ContracheckError, UnicodeDecodeError) as ex:
        print(f"contracheck: {ex}", file=sys.stderr)
        return 2
    out = dumps(report) if config.format == "json" else render_text(report)
    sys.stdout.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
