import random
import threading
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from concsynth import clia, difflogic
from concsynth.clia import App, Const, Geq, ModEq, Var
from concsynth.errors import Cancelled, ProtocolError, SolverSpawnError
from concsynth.smt import FunDef, SmtSession

from oracles import random_formula

x, y = Var("x"), Var("y")


def test_unsat(session):
    r = session.check_sat(clia.conj(Geq(x, Const(1)), clia.negate(Geq(x, Const(0)))))
    assert r.is_unsat


def test_sat_model(session):
    r = session.check_sat(clia.eq(x, Const(3)))
    assert r.is_sat and r.model == {"x": 3}


def test_modulo_model(session):
    c = clia.conj(ModEq(x, 2, 1), Geq(x, Const(10)), clia.le(x, Const(11)))
    r = session.check_sat(c)
    assert r.model["x"] == 11


def test_negative_values_and_extra_symbols(session):
    r = session.check_sat(clia.eq(x, Const(-7)), symbols=("unused",))
    assert r.model["x"] == -7
    assert "unused" in r.model


def test_validity(session):
    assert session.check_valid(clia.disj(Geq(x, Const(0)), Geq(Const(0), x))).valid is True
    v = session.check_valid(Geq(x, Const(0)))
    assert v.valid is False and v.witness["x"] < 0


def test_validity_with_definition(session):
    spec = clia.conj(
        Geq(App("max2", (x, y)), x),
        Geq(App("max2", (x, y)), y),
        clia.disj(clia.eq(App("max2", (x, y)), x), clia.eq(App("max2", (x, y)), y)),
    )
    good = FunDef(("a", "b"), clia.Ite(Geq(Var("a"), Var("b")), Var("a"), Var("b")))
    assert session.check_valid(spec, defs={"max2": good}).valid is True
    v = session.check_valid(spec, defs={"max2": FunDef(("a", "b"), Const(0))})
    assert v.valid is False
    assert not clia.eval_cond(spec, v.witness, {"max2": lambda a, b: 0})


def test_session_survives_many_queries(session):
    for i in range(30):
        assert session.check_sat(clia.eq(x, Const(i))).model["x"] == i


def test_restart_after_kill():
    with SmtSession() as s:
        s.check_sat(clia.eq(x, Const(1)))
        s._proc.kill()
        s._proc.wait()
        assert s.check_sat(clia.eq(x, Const(2))).model["x"] == 2


def test_kill_mid_query_is_an_error_not_a_hang():
    s = SmtSession(timeout_ms=60_000)
    s.start()
    proc = s._proc
    threading.Timer(0.5, proc.kill).start()
    t0 = time.monotonic()
    with pytest.raises(ProtocolError):
        # far too slow for z3 to finish in half a second
        s.check_sat(ordering_principle(22))
    assert time.monotonic() - t0 < 10
    assert s.check_sat(clia.eq(x, Const(4))).model["x"] == 4
    s.close()


def test_interrupt_cancels():
    s = SmtSession()
    s.interrupt()
    with pytest.raises(Cancelled):
        s.check_sat(clia.eq(x, Const(1)))
    s.close()


def test_missing_solver():
    with pytest.raises(SolverSpawnError):
        SmtSession("/nonexistent/solver-binary").check_sat(clia.eq(x, Const(1)))


def test_expired_deadline_is_unknown(session):
    r = session.check_sat(clia.eq(x, Const(1)), deadline=time.monotonic() - 1)
    assert r.is_unknown


# ---------------------------------------------------------------------------
# difference-logic abstraction
# ---------------------------------------------------------------------------


def ordering_principle(n):
    """No element of x1..xn is at least every other one: unsat."""
    xs = [Var(f"x{i}") for i in range(n)]
    return clia.conj(*(clia.disj(*(clia.gt(b, a) for b in xs if b is not a)) for a in xs))


def test_difference_literal():
    lin = clia.Lin.of({"a": 1, "b": -1}, -3)  # a - b - 3 >= 0
    assert difflogic.difference_literal(lin) == ("a", "b", 3, True)
    lin = clia.Lin.of({"a": -1, "b": 1}, 2)  # b - a + 2 >= 0, i.e. not (a - b >= 3)
    assert difflogic.difference_literal(lin) == ("a", "b", 3, False)
    assert difflogic.difference_literal(clia.Lin.of({"a": 2, "b": -1}, 0)) is None
    # bounds go through the zero variable: a >= 4 is not (0 - a >= -3)
    assert difflogic.difference_literal(clia.Lin.of({"a": 1}, -4)) == ("", "a", -3, False)


def test_refute_ordering_principle(session):
    assert difflogic.refute(session, ordering_principle(8))


def test_refute_does_not_claim_satisfiable(session):
    c = clia.conj(Geq(x, y), Geq(y, Const(3)))
    assert not difflogic.refute(session, c)


def test_presolve_matches_direct(session):
    c = ordering_principle(6)
    assert session.check_sat(c, presolve=True).is_unsat
    assert session.check_sat(clia.conj(Geq(x, y)), presolve=True).is_sat


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_lemmas_are_valid(seed):
    rng = random.Random(seed)
    names = ["a", "b", "c"]
    atoms = []
    for _ in range(5):
        u, v = rng.sample(names + [None], 2)
        k = rng.randint(-3, 3)
        lhs = Var(u) if u else Const(0)
        rhs = clia.add(Var(v) if v else Const(0), Const(k))
        atoms.append(Geq(lhs, rhs))
    ab = difflogic.Abstraction()
    for a in atoms:
        ab.atom(a)
    clauses = difflogic.lemmas(ab)
    meaning = {}
    for key, name in ab.names.items():
        u, v, k = key
        meaning[name] = (u, v, k)
    # every lemma must hold at every integer point of a small box
    for point in range(0, 7**3, 5):
        env = {"": 0, "a": point % 7 - 3, "b": point // 7 % 7 - 3, "c": point // 49 - 3}
        truth = {n: env[u] - env[v] >= k for n, (u, v, k) in meaning.items()}
        for cl in clauses:
            assert _eval_clause(cl, truth), cl


def _eval_clause(cl, truth):
    body = cl[len("(or "):-1]
    lits = []
    depth = 0
    cur = ""
    for ch in body:
        if ch == "(":
            depth += 1
        if ch == ")":
            depth -= 1
        if ch == " " and depth == 0:
            lits.append(cur)
            cur = ""
        else:
            cur += ch
    lits.append(cur)
    return any(_eval_lit(lit, truth) for lit in lits)


def _eval_lit(lit, truth):
    if lit.startswith("(not "):
        return not _eval_lit(lit[5:-1], truth)
    return truth[lit]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_refute_is_sound(seed):
    rng = random.Random(seed)
    c = random_formula(rng, ["a", "b", "c"], atoms=5, coef=1, const=3)
    with SmtSession() as s:
        if difflogic.refute(s, c):
            assert s.check_sat(c).is_unsat
