import json

import pytest

from contracheck.cli import RunConfig, main, run
from contracheck.report import dumps

from helpers import PROGRAMS, Z3_COMMAND, needs_z3


def verify(capsys, *args):
    code = main(["verify", *map(str, args)])
    out = capsys.readouterr()
    return code, out.out, out.err


def goals_by_id(report):
    return {g["id"]: g for fn in report["functions"] for g in fn["goals"]}


def test_text_report(capsys):
    code, out, _ = verify(capsys, PROGRAMS / "toy.mw", "--jobs", "1")
    assert code == 1
    assert "main/assert@7:29: assertion: subcontract weakness at" in out
    assert "standard execution: normal termination, result ()" in out
    assert out.endswith("3 goal(s): 1 proved, 1 sat, 1 unknown\n")


def test_json_round_trip(capsys):
    code, out, _ = verify(capsys, PROGRAMS / "weak.mw", "--format", "json")
    report = json.loads(out)
    assert dumps(report) == out
    assert report["version"] == 1
    g = goals_by_id(report)["wrong/assert@19:12"]
    assert g["verdict"]["category"] == "non-conformance"
    assert g["std_outcome"]["outcome"] == "failure"
    assert g["counterexample"][0]["var"] == "v"


def test_report_is_stable(capsys):
    def once():
        _, out, _ = verify(capsys, PROGRAMS / "isqrt_mut2.mw", PROGRAMS / "toy.mw",
                           "--format", "json", "--bound", "10")
        report = json.loads(out)
        del report["meta"]["wall_time"]
        return report
    assert once() == once()


def test_goal_order_and_ids(capsys):
    _, out, _ = verify(capsys, PROGRAMS / "isqrt.mw", "--format", "json", "--bound", "4")
    ids = [g["id"] for g in json.loads(out)["functions"][0]["goals"]]
    assert ids == [
        "isqrt/inv_init.1@8:20", "isqrt/inv_init.2@9:20", "isqrt/inv_init.3@10:20",
        "isqrt/inv_init.4@11:20", "isqrt/inv_pres.1@8:20", "isqrt/inv_pres.2@9:20",
        "isqrt/inv_pres.3@10:20", "isqrt/inv_pres.4@11:20", "isqrt/post@3:13",
    ]


def test_empty_file(tmp_path, capsys):
    path = tmp_path / "empty.mw"
    path.write_text("")
    code, out, _ = verify(capsys, path)
    assert code == 0 and out == "0 goal(s)\n"


def test_all_proved_exits_zero(tmp_path, capsys):
    path = tmp_path / "ok.mw"
    path.write_text("let f (a: int) : int\n  requires { 0 <= a <= 3 }\n  ensures { result >= a }\n= a + 1\n")
    code, out, _ = verify(capsys, path)
    assert code == 0 and "f/post@3:13: postcondition of f: proved" in out


@pytest.mark.parametrize("text", ["let f (a: int) : int = a +", "let f (a: int) : int = b",
                                  "let f (a: int) : bool = a + 1"])
def test_bad_input_exits_two(tmp_path, capsys, text):
    path = tmp_path / "bad.mw"
    path.write_text(text)
    code, out, err = verify(capsys, path)
    assert code == 2 and out == "" and "bad.mw" in err


def test_missing_file(capsys):
    code, _, err = verify(capsys, "does-not-exist.mw")
    assert code == 2 and "does-not-exist.mw" in err


@pytest.mark.parametrize("flags", [["--bound", "-1"], ["--fuel", "0"], ["--jobs", "0"],
                                   ["--timeout", "-2"]])
def test_bad_options(capsys, flags):
    code, _, err = verify(capsys, PROGRAMS / "toy.mw", *flags)
    assert code == 2 and err.startswith("contracheck: ")


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bound": 3, "format": "json", "trace": True}))
    _, out, _ = verify(capsys, PROGRAMS / "toy.mw", "--config", cfg)
    report = json.loads(out)
    assert report["meta"]["bound"] == 3
    # below the bound the toy counterexample needs, nothing is found
    assert all("verdict" not in g for g in goals_by_id(report).values())
    _, out, _ = verify(capsys, PROGRAMS / "toy.mw", "--config", cfg, "--bound", "8")
    g = goals_by_id(json.loads(out))["main/assert@7:29"]
    assert g["trace"]["giant-step"][-1] == "check assertion at 7:29: FAILED"


@pytest.mark.parametrize("content", ['{"bound": "3"}', '{"colour": 1}', "[1]", "{"])
def test_bad_config_file(tmp_path, capsys, content):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(content)
    code, _, _ = verify(capsys, PROGRAMS / "toy.mw", "--config", cfg)
    assert code == 2


def test_solver_failure_is_reported(capsys):
    code, out, _ = verify(capsys, PROGRAMS / "toy.mw", "--solver", "no-such-solver-binary")
    assert code == 1 and "solver answered error (cannot run no-such-solver-binary" in out


def test_zero_timeout(capsys):
    code, out, _ = verify(capsys, PROGRAMS / "toy.mw", "--solver", "z3 -in", "--timeout", "0")
    assert code == 1 and "3 goal(s): 3 timeout" in out


def test_run_api():
    report, code = run(RunConfig([str(PROGRAMS / "counter.mw")], bound=6, jobs=2))
    assert code in (0, 1)
    assert [fn["name"] for fn in report["functions"]] == ["bump", "run"]


@needs_z3
def test_broken_invariant_with_z3(capsys):
    code, out, _ = verify(capsys, PROGRAMS / "isqrt_mut1.mw", "--solver", Z3_COMMAND,
                          "--format", "json")
    goals = goals_by_id(json.loads(out))
    assert code == 1
    bad = goals["isqrt/inv_pres.2@9:20"]
    assert bad["verdict"]["category"] == "non-conformance"
    assert bad["verdict"]["loc"].endswith(":9:20")
    assert goals["isqrt/inv_init.2@9:20"]["status"] == "proved"
    assert goals["isqrt/inv_pres.1@8:20"]["status"] == "proved"


@needs_z3
def test_intact_program_with_z3(capsys):
    code, out, _ = verify(capsys, PROGRAMS / "isqrt.mw", "--solver", Z3_COMMAND)
    assert code == 0 and out.endswith("9 goal(s): 9 proved\n")
