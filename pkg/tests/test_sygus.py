import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from concsynth import clia, sexpr, sygus
from concsynth.clia import Const, Geq, Ite, Var
from concsynth.errors import ConcSynthError, ParseError, UnsupportedLogic, UnsupportedProblem
from concsynth.printer import to_sexpr

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

COUNTER = """
(set-logic LIA)
(synth-inv inv ((x Int)))
(declare-primed-var x Int)
(define-fun pre-f ((x Int)) Bool (= x 0))
(define-fun trans-f ((x Int) (x! Int)) Bool (and (<= x 10) (= x! (+ x 1))))
(define-fun post-f ((x Int)) Bool (<= x 11))
(inv-constraint inv pre-f trans-f post-f)
(check-synth)
"""


def test_sexpr_atoms_and_comments():
    got = sexpr.parse_all('(a (b 1) -2 "s") ; trailing\n x')
    assert got == [["a", ["b", 1], -2, "s"], "x"]
    assert isinstance(got[0][0], sexpr.Symbol)
    assert isinstance(got[0][3], sexpr.String)


def test_sexpr_balance():
    assert sexpr.is_balanced("(a (b))")
    assert not sexpr.is_balanced("(a (b)")


def test_parse_max2():
    p = sygus.parse(MAX2)
    assert p.fname == "max2"
    assert p.params == ("x", "y")
    assert p.return_sort == "Int"
    assert p.track == "CLIA"
    for a, b in itertools.product(range(-3, 4), repeat=2):
        env = {"x": a, "y": b}
        assert clia.eval_cond(p.spec, env, {"max2": max})
        assert not clia.eval_cond(p.spec, env, {"max2": lambda u, v: max(u, v) + 1})


def test_parse_inv_constraint():
    p = sygus.parse(COUNTER)
    assert p.track == "INV"
    assert p.return_sort == "Bool"
    assert p.inv_parts.state_vars == ("x",)
    parts = p.verify_spec.args
    assert len(parts) == 3
    good = {"inv": lambda v: 0 <= v <= 11}
    bad = {"inv": lambda v: 0 <= v <= 5}
    for v in range(-3, 15):
        for x2 in range(-3, 15):
            env = {"x": v, "x!": x2}
            assert clia.eval_cond(p.verify_spec, env, good)
    assert not all(
        clia.eval_cond(p.verify_spec, {"x": v, "x!": v + 1}, bad) for v in range(-3, 15)
    )


def test_parse_error_position():
    with pytest.raises(ParseError) as info:
        sygus.parse("(set-logic LIA)\n(check-synt")
    assert info.value.line == 2


def test_unsupported_inputs():
    with pytest.raises(UnsupportedLogic):
        sygus.parse("(set-logic BV)\n(check-synth)")
    with pytest.raises(ConcSynthError):
        sygus.parse(
            "(set-logic LIA)(synth-fun f ((x Int)) Int)(declare-var x Int)"
            "(constraint (= (f x) (* x x)))(check-synth)"
        )
    with pytest.raises(UnsupportedProblem):
        sygus.parse(
            "(set-logic LIA)(synth-fun f ((x Int)) Int)(synth-fun g ((x Int)) Int)"
            "(declare-var x Int)(constraint (= (f x) (g x)))(check-synth)"
        )


def test_grammar_warning():
    text = MAX2.replace("Int)\n(declare-var x", "Int ((Start Int (x y))))\n(declare-var x", 1)
    p = sygus.parse(text)
    assert any("grammar" in w for w in p.warnings)


def test_mod_and_div_free_macros():
    p = sygus.parse(
        "(set-logic LIA)(synth-fun f ((x Int)) Int)(declare-var x Int)"
        "(define-fun two ((a Int)) Int (* 2 a))"
        "(constraint (= (f x) (two x)))(constraint (= (mod (f x) 2) 0))(check-synth)"
    )
    for v in range(-4, 5):
        assert clia.eval_cond(p.spec, {"x": v}, {"f": lambda a: 2 * a})


def test_print_solution_examples():
    p = sygus.parse(MAX2)
    body = Ite(Geq(Var("x"), Var("y")), Var("x"), Var("y"))
    assert sygus.print_solution(p, body) == "(define-fun max2 ((x Int) (y Int)) Int (ite (>= x y) x y))"
    f = sygus.parse("(set-logic LIA)(synth-fun f ((x Int)) Int)(declare-var x Int)(constraint (>= (f x) 0))(check-synth)")
    assert sygus.print_solution(f, Const(0)) == "(define-fun f ((x Int)) Int 0)"
    inv = sygus.parse(COUNTER)
    assert sygus.print_solution(inv, Geq(Var("x"), Const(0))) == "(define-fun inv ((x Int)) Bool (>= x 0))"


def test_negative_numerals():
    assert to_sexpr(Const(-2)) == "(- 2)"
    assert to_sexpr(clia.sub(Var("x"), Const(3))) == "(- x 3)"


def terms():
    leaf = st.one_of(st.sampled_from([Var("x"), Var("y")]), st.integers(-5, 5).map(Const))
    return st.recursive(
        leaf,
        lambda t: st.one_of(
            st.builds(clia.Add, t, t),
            st.builds(clia.Mul, st.integers(-3, 3), t),
            st.builds(lambda a, b, c, d: Ite(Geq(a, b), c, d), t, t, t, t),
        ),
        max_leaves=8,
    )


@settings(max_examples=80, deadline=None)
@given(terms())
def test_print_parse_roundtrip(body):
    p = sygus.parse(MAX2)
    text = sygus.print_solution(p, body)
    name, params, sort, parsed = sygus.parse_define_fun(text)
    assert (name, params, sort) == ("max2", ("x", "y"), "Int")
    for a, b in itertools.product(range(-2, 3), repeat=2):
        env = {"x": a, "y": b}
        assert clia.eval_term(parsed, env) == clia.eval_term(body, env)
