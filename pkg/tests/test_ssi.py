import itertools

import pytest

from concsynth import clia, ssi, sygus
from concsynth.clia import App, Const, Geq, ModEq, Var
from concsynth.errors import NoSolution, NonUnitCoefficient, UnsupportedProblem
from concsynth.smt import FunDef

x, y = Var("x"), Var("y")
fx = App("f", (x,))


def spec1(*constraints):
    return clia.conj(*constraints)


def check(session, spec, params, body):
    return session.check_valid(spec, defs={"f": FunDef(tuple(params), body)}).valid


def test_single_invocation_detection():
    assert ssi.single_invocation(Geq(fx, x), "f") == ("x",)
    # two distinct call shapes
    assert ssi.single_invocation(Geq(fx, App("f", (y,))), "f") is None
    # same call twice inside one atom
    assert ssi.single_invocation(Geq(clia.add(fx, fx), x), "f") is None
    # argument is not a variable
    assert ssi.single_invocation(Geq(App("f", (clia.add(x, Const(1)),)), x), "f") is None
    # a variable that is not an argument
    assert ssi.single_invocation(Geq(fx, y), "f") is None


def test_normal_form_atoms():
    nf = ssi.ssi_normalize(spec1(Geq(fx, x), clia.le(fx, clia.add(x, Const(3)))), "f", ("a",))
    dirs = sorted(d for d, _ in nf.atoms)
    assert dirs == [ssi.LOWER, ssi.UPPER]
    assert nf.arg_vars == ("x",)
    assert nf.z not in ("x", "a")


def test_non_unit_coefficient():
    with pytest.raises(NonUnitCoefficient):
        ssi.ssi_normalize(clia.eq(clia.Mul(2, fx), x), "f", ("a",))
    with pytest.raises(NonUnitCoefficient):
        ssi.ssi_normalize(ModEq(fx, 2, 0), "f", ("a",))


def test_not_single_invocation_rejected(session):
    with pytest.raises(UnsupportedProblem):
        ssi.solve_single_invocation(Geq(fx, App("f", (y,))), "f", ("a",), session)


def test_contradictory_bounds(session):
    spec = spec1(Geq(fx, x), clia.le(fx, clia.sub(x, Const(1))))
    with pytest.raises(NoSolution) as info:
        ssi.solve_single_invocation(spec, "f", ("a",), session)
    assert "x" in info.value.witness


def test_nonexistence_witness_brute_force(session):
    spec = spec1(Geq(fx, Const(0)), clia.le(fx, x))
    with pytest.raises(NoSolution) as info:
        ssi.solve_single_invocation(spec, "f", ("a",), session)
    w = info.value.witness
    assert w["x"] < 0
    nf = ssi.ssi_normalize(spec, "f", ("a",))
    assert not ssi.brute_force_exists(nf, w)
    assert ssi.brute_force_exists(nf, {"x": 0})


def test_existence_condition_matches_brute_force():
    spec = spec1(Geq(fx, clia.Mul(2, x)), clia.le(fx, clia.add(x, Const(4))), ModEq(x, 2, 0))
    nf = ssi.ssi_normalize(spec, "f", ("a",))
    gamma = ssi.existence_condition(nf)
    for v in range(-10, 11):
        assert clia.eval_cond(gamma, {"x": v}) == ssi.brute_force_exists(nf, {"x": v}, -40, 40)


def test_max2_solution(session):
    m = App("f", (x, y))
    spec = spec1(Geq(m, x), Geq(m, y), clia.disj(clia.eq(m, x), clia.eq(m, y)))
    sol = ssi.solve_single_invocation(spec, "f", ("a", "b"), session)
    assert clia.free_vars(sol) <= {"a", "b"}
    for a, b in itertools.product(range(-3, 4), repeat=2):
        assert clia.eval_term(sol, {"a": a, "b": b}) == max(a, b)
    assert check(session, spec, ("a", "b"), sol)


def test_parameters_renamed_positionally(session):
    # spec variables are (y, x) in call order; the solution must use the parameter names
    spec = clia.eq(App("f", (y, x)), clia.sub(y, x))
    sol = ssi.solve_single_invocation(spec, "f", ("p", "q"), session)
    assert clia.eval_term(sol, {"p": 5, "q": 2}) == 3


def test_bool_function(session):
    spec = clia.iff(clia.AppB("f", (x,)), Geq(x, Const(3)))
    sol = ssi.solve_single_invocation(spec, "f", ("a",), session, is_bool=True)
    for v in range(-5, 8):
        assert clia.eval_cond(sol, {"a": v}) == (v >= 3)


def test_commutative_max(session):
    m, m2 = App("f", (x, y)), App("f", (y, x))
    spec = spec1(clia.eq(m, m2), Geq(m, x), Geq(m, y), clia.disj(clia.eq(m, x), clia.eq(m, y)))
    assert ssi.single_invocation(spec, "f") is None
    assert ssi.commutative_subspec(spec, "f") is not None
    sol = ssi.ssi_commutative(spec, "f", ("a", "b"), session)
    assert check(session, spec, ("a", "b"), sol)


def test_commutative_sum(session):
    m, m2 = App("f", (x, y)), App("f", (y, x))
    spec = spec1(clia.eq(m, m2), clia.eq(m, clia.add(x, y)))
    sol = ssi.ssi_commutative(spec, "f", ("a", "b"), session)
    assert check(session, spec, ("a", "b"), sol)


def test_commutative_unsolvable_rest():
    m, m2 = App("f", (x, y)), App("f", (y, x))
    # f(x,y) = x - y is incompatible with commutativity but still has a sub-spec
    spec = spec1(clia.eq(m, m2), clia.eq(m, clia.sub(x, y)))
    assert ssi.commutative_subspec(spec, "f") is not None


@pytest.mark.parametrize("name", ["fg_max2", "fg_max5", "fg_array_search_4", "fg_array_sum_2_5", "ssi_abs", "ssi_identity"])
def test_corpus_samples(session, bench, name):
    p = sygus.parse_file(bench / "ssi" / f"{name}.sl")
    sol = ssi.solve_single_invocation(p.spec, p.fname, p.params, session, p.is_bool)
    assert session.check_valid(p.check_spec, defs={p.fname: FunDef(p.params, sol, p.return_sort)}).valid
