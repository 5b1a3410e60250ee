import csv
import json

import pytest

from concsynth import cli, dispatch, harness, sygus
from concsynth.classify import Fragment, category, classify
from concsynth.clia import Var
from concsynth.dispatch import SolveOptions
from concsynth.smt import FunDef, SmtSession

MAX2 = """
(set-logic LIA)
(synth-fun max2 ((x Int) (y Int)) Int)
(declare-var x Int)
(declare-var y Int)
(constraint (>= (max2 x y) x))
(constraint (>= (max2 x y) y))
(constraint (or (= x (max2 x y)) (= y (max2 x y))))
(check-synth)
"""

DOUBLE_SUM = """
(set-logic LIA)
(synth-fun f ((x Int)) Int)
(declare-var x Int)
(constraint (= (+ (f x) (f x)) (* 4 x)))
(check-synth)
"""

COMM = """
(set-logic LIA)
(synth-fun f ((a Int) (b Int)) Int)
(declare-var x Int)
(declare-var y Int)
(constraint (= (f x y) (f y x)))
(constraint (>= (f x y) x))
(constraint (>= (f x y) y))
(check-synth)
"""

UNSAT = """
(set-logic LIA)
(synth-fun f ((x Int)) Int)
(declare-var x Int)
(constraint (>= (f x) 0))
(constraint (<= (f x) x))
(check-synth)
"""

CYCLIC = """
(set-logic LIA)
(synth-inv inv ((x Int)))
(declare-primed-var x Int)
(define-fun pre-f ((x Int)) Bool (= x 0))
(define-fun trans-f ((x Int) (x! Int)) Bool (= x! (ite (<= x 0) (+ x 1) (- x 1))))
(define-fun post-f ((x Int)) Bool (and (>= x 0) (<= x 1)))
(inv-constraint inv pre-f trans-f post-f)
(check-synth)
"""


def test_classify(session):
    assert classify(sygus.parse(MAX2), session).tag is Fragment.SSI
    assert classify(sygus.parse(COMM), session).tag is Fragment.SSI_COMMUTATIVE
    p = sygus.parse(DOUBLE_SUM)
    cls = classify(p, session)
    # f(x) appears twice in one atom
    assert cls.tag is Fragment.GENERAL
    assert category(p, cls) == "CLIA(non-SSI)"
    p = sygus.parse(CYCLIC)
    cls = classify(p, session)
    assert cls.tag is Fragment.GENERAL and "Cyclic" in cls.reason
    assert category(p, cls) == "INV(non-AT)"


def test_solve_ssi():
    out = dispatch.solve(sygus.parse(MAX2))
    assert out.status == dispatch.SOLVED and out.engine == "ssi" and out.verified
    assert out.category == "CLIA(SSI)"


def test_solve_general_via_concolic():
    out = dispatch.solve(sygus.parse(DOUBLE_SUM))
    assert out.status == dispatch.SOLVED and out.engine == "concolic" and out.verified
    assert out.stats["height"] == 1


def test_solve_commutative():
    out = dispatch.solve(sygus.parse(COMM))
    assert out.status == dispatch.SOLVED and out.verified


def test_solve_nonexistence_audited():
    out = dispatch.solve(sygus.parse(UNSAT))
    assert out.status == dispatch.NO_SOLUTION
    assert out.verified
    assert out.witness["x"] < 0


def test_cyclic_inv_goes_to_concolic():
    out = dispatch.solve(sygus.parse(CYCLIC), SolveOptions(timeout=60))
    assert out.engine == "concolic"
    assert out.status == dispatch.SOLVED and out.verified


def test_forced_engine_mismatch():
    out = dispatch.solve(sygus.parse(DOUBLE_SUM), SolveOptions(engine="ssi"))
    assert out.status == dispatch.ERROR
    out = dispatch.solve(sygus.parse(MAX2), SolveOptions(engine="at"))
    assert out.status == dispatch.ERROR


def test_no_fragments_forces_concolic():
    out = dispatch.solve(sygus.parse(MAX2), SolveOptions(fragments=False))
    assert out.engine == "concolic" and out.status == dispatch.SOLVED
    assert out.stats["height"] == 2


def test_unknown_engine_rejected():
    with pytest.raises(ValueError):
        dispatch.solve(sygus.parse(MAX2), SolveOptions(engine="magic"))


def test_verify_solution_rejects_wrong_answer():
    p = sygus.parse(MAX2)
    assert dispatch.verify_solution(p, Var("x")) is False


# ---------------------------------------------------------------------------
# harness and command line
# ---------------------------------------------------------------------------


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_empty_suite(tmp_path, capsys):
    assert cli.main(["bench", str(tmp_path)]) == cli.EXIT_OK
    assert harness.run_suite(tmp_path) == []


def test_suite_csv_and_json(tmp_path):
    write(tmp_path, "a_max2.sl", MAX2)
    write(tmp_path, "b_unsat.sl", UNSAT)
    write(tmp_path, "c_broken.sl", "(set-logic LIA)\n(synth-fun")
    out_csv = tmp_path / "out.csv"
    out_json = tmp_path / "out.json"
    code = cli.main(["bench", str(tmp_path), "--suite-jobs", "2", "--csv", str(out_csv), "--json", str(out_json)])
    assert code == cli.EXIT_OK
    rows = list(csv.DictReader(out_csv.open()))
    assert tuple(rows[0].keys()) == harness.CSV_COLUMNS
    assert [r["status"] for r in rows] == ["Solved", "NoSolution", "Error"]
    data = json.loads(out_json.read_text())
    assert len(data["records"]) == 3
    assert data["summary"]["unsound"] == 0


def test_breakdown_counts():
    recs = [
        harness.RunRecord("a", "CLIA(SSI)", "ssi", "Solved", 5, True),
        harness.RunRecord("b", "CLIA(SSI)", "ssi", "Timeout", 5, False),
        harness.RunRecord("c", "INV(AT)", "at", "NoSolution", 5, True),
    ]
    b = harness.breakdown(recs)
    assert b["CLIA(SSI)"]["Solved"] == 1
    assert b["INV(AT)"]["NoSolution"] == 1
    assert "CLIA(SSI)" in harness.format_breakdown(recs)


def test_cli_solve_outputs(tmp_path, capsys):
    f = write(tmp_path, "max2.sl", MAX2)
    stats = tmp_path / "stats.json"
    assert cli.main(["solve", str(f), "--stats", str(stats)]) == cli.EXIT_OK
    out = capsys.readouterr().out.strip()
    assert out.startswith("(define-fun max2 ((x Int) (y Int)) Int")
    name, params, sort, body = sygus.parse_define_fun(out)
    p = sygus.parse(MAX2)
    with SmtSession() as s:
        assert s.check_valid(p.spec, defs={"max2": FunDef(params, body)}).valid
    data = json.loads(stats.read_text())
    assert data["status"] == "Solved" and data["engine"] == "ssi"


def test_cli_infeasible(tmp_path, capsys):
    f = write(tmp_path, "u.sl", UNSAT)
    assert cli.main(["solve", str(f)]) == cli.EXIT_OK
    assert capsys.readouterr().out.strip() == "infeasible"


def test_cli_parse_error(tmp_path, capsys):
    f = write(tmp_path, "bad.sl", "(set-logic LIA)\n(check-synt")
    assert cli.main(["solve", str(f)]) == cli.EXIT_ERROR
    assert "bad.sl:2:" in capsys.readouterr().err


def test_cli_timeout_exit_code(tmp_path, capsys):
    f = write(tmp_path, "max2.sl", MAX2)
    code = cli.main(["solve", str(f), "--engine", "concolic", "--timeout", "0.001"])
    assert code == cli.EXIT_UNKNOWN
    assert capsys.readouterr().out.strip() == "unknown"


def test_cli_unsound_exit_code(tmp_path, capsys, monkeypatch):
    f = write(tmp_path, "max2.sl", MAX2)
    monkeypatch.setattr(dispatch, "verify_solution", lambda *a, **k: False)
    assert cli.main(["solve", str(f)]) == cli.EXIT_UNSOUND


def test_cli_dump_graph(tmp_path, capsys):
    f = write(
        tmp_path,
        "c.sl",
        CYCLIC.replace("(ite (<= x 0) (+ x 1) (- x 1))", "(ite (<= x 9) (+ x 1) x)").replace(
            "(and (>= x 0) (<= x 1))", "(<= x 10)"
        ),
    )
    assert cli.main(["solve", str(f), "--dump-graph"]) == cli.EXIT_OK
    assert "digraph" in capsys.readouterr().err
