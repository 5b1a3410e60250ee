"""Regenerate the bundled benchmark corpus.

    python benchmarks/generate.py

Families: ``ssi/`` (max, array search, array sum), ``ssi_comm/`` (commutative
single-invocation), ``at/`` (translational loops), ``general/`` (everything the
fragments do not cover) and ``excluded/`` (inputs outside the supported subset,
listed in EXCLUDED.txt).
"""

from __future__ import annotations

import argparse
from pathlib import Path

ROOT = Path(__file__).resolve().parent

INT_GRAMMAR = """((Start Int ({vars} 0 1 (+ Start Start) (- Start Start) (ite StartBool Start Start)))
   (StartBool Bool ((and StartBool StartBool) (or StartBool StartBool) (not StartBool)
                    (<= Start Start) (= Start Start) (>= Start Start))))"""


def _header(name, params, sort="Int", grammar=True):
    plist = " ".join(f"({p} Int)" for p in params)
    g = ""
    if grammar:
        g = "\n  " + INT_GRAMMAR.format(vars=" ".join(params))
    return f"(set-logic LIA)\n(synth-fun {name} ({plist}) {sort}{g})\n"


def fg_max(n: int) -> str:
    xs = [f"x{i}" for i in range(1, n + 1)]
    call = f"(max{n} {' '.join(xs)})"
    out = _header(f"max{n}", xs)
    out += "".join(f"(declare-var {x} Int)\n" for x in xs)
    out += "".join(f"(constraint (>= {call} {x}))\n" for x in xs)
    out += f"(constraint (or {' '.join(f'(= {x} {call})' for x in xs)}))\n"
    return out + "(check-synth)\n"


def fg_array_search(n: int) -> str:
    ys = [f"y{i}" for i in range(1, n + 1)]
    xs = [f"x{i}" for i in range(1, n + 1)]
    call = f"(findIdx {' '.join(xs)} k1)"
    out = _header("findIdx", ys + ["k1"])
    out += "".join(f"(declare-var {x} Int)\n" for x in xs) + "(declare-var k1 Int)\n"
    sorted_ = " ".join(f"(< {a} {b})" for a, b in zip(xs, xs[1:]))
    sorted_ = f"(and {sorted_})" if n > 2 else sorted_
    out += f"(constraint (=> {sorted_} (=> (< k1 {xs[0]}) (= {call} 0))))\n"
    out += f"(constraint (=> {sorted_} (=> (> k1 {xs[-1]}) (= {call} {n}))))\n"
    for i in range(1, n):
        a, b = xs[i - 1], xs[i]
        out += f"(constraint (=> {sorted_} (=> (and (> k1 {a}) (< k1 {b})) (= {call} {i}))))\n"
    return out + "(check-synth)\n"


def fg_array_sum(n: int, bound: int) -> str:
    xs = [f"x{i}" for i in range(1, n + 1)]
    ys = [f"y{i}" for i in range(1, n + 1)]
    call = f"(findSum {' '.join(xs)})"
    out = _header("findSum", ys)
    out += "".join(f"(declare-var {x} Int)\n" for x in xs)
    total = f"(+ {' '.join(xs)})"
    out += f"(constraint (=> (> {total} {bound}) (= {call} {total})))\n"
    out += f"(constraint (=> (<= {total} {bound}) (= {call} 0)))\n"
    return out + "(check-synth)\n"


SSI_MISC = {
    "ssi_unsat_interval.sl": """(set-logic LIA)
(synth-fun f ((x Int)) Int)
(declare-var x Int)
(constraint (>= (f x) 0))
(constraint (<= (f x) x))
(check-synth)
""",
    "ssi_identity.sl": """(set-logic LIA)
(synth-fun f ((x Int)) Int)
(declare-var x Int)
(constraint (= (f x) x))
(check-synth)
""",
    "ssi_bool_ge.sl": """(set-logic LIA)
(synth-fun ge ((a Int) (b Int)) Bool)
(declare-var x Int)
(declare-var y Int)
(constraint (= (ge x y) (>= x y)))
(check-synth)
""",
    "ssi_abs.sl": """(set-logic LIA)
(synth-fun absv ((a Int)) Int)
(declare-var x Int)
(constraint (>= (absv x) x))
(constraint (>= (absv x) (- x)))
(constraint (or (= (absv x) x) (= (absv x) (- x))))
(check-synth)
""",
}

SSI_COMM = {
    "comm_max2.sl": """(set-logic LIA)
(synth-fun f ((a Int) (b Int)) Int)
(declare-var x Int)
(declare-var y Int)
(constraint (= (f x y) (f y x)))
(constraint (>= (f x y) x))
(constraint (>= (f x y) y))
(constraint (or (= (f x y) x) (= (f x y) y)))
(check-synth)
""",
    "comm_min2.sl": """(set-logic LIA)
(synth-fun f ((a Int) (b Int)) Int)
(declare-var x Int)
(declare-var y Int)
(constraint (= (f x y) (f y x)))
(constraint (<= (f x y) x))
(constraint (<= (f y x) y))
(constraint (or (= (f x y) x) (= (f y x) y)))
(check-synth)
""",
    "comm_sum.sl": """(set-logic LIA)
(synth-fun f ((a Int) (b Int)) Int)
(declare-var x Int)
(declare-var y Int)
(constraint (= (f x y) (f y x)))
(constraint (= (f x y) (+ x y)))
(check-synth)
""",
    "comm_absdiff.sl": """(set-logic LIA)
(synth-fun f ((a Int) (b Int)) Int)
(declare-var x Int)
(declare-var y Int)
(constraint (= (f x y) (f y x)))
(constraint (>= (f x y) (- x y)))
(constraint (>= (f x y) (- y x)))
(constraint (or (= (f x y) (- x y)) (= (f x y) (- y x))))
(check-synth)
""",
    "comm_max_plus1.sl": """(set-logic LIA)
(synth-fun f ((a Int) (b Int)) Int)
(declare-var x Int)
(declare-var y Int)
(constraint (= (f x y) (f y x)))
(constraint (> (f x y) x))
(constraint (> (f x y) y))
(constraint (or (= (f x y) (+ x 1)) (= (f x y) (+ y 1))))
(check-synth)
""",
}


def inv_file(state, pre, trans, post, inv="inv") -> str:
    ps = " ".join(f"({v} Int)" for v in state)
    pps = " ".join(f"({v}! Int)" for v in state)
    out = "(set-logic LIA)\n"
    out += f"(synth-inv {inv} ({ps}))\n"
    out += "".join(f"(declare-primed-var {v} Int)\n" for v in state)
    out += f"(define-fun pre-f ({ps}) Bool\n  {pre})\n"
    out += f"(define-fun trans-f ({ps} {pps}) Bool\n  {trans})\n"
    out += f"(define-fun post-f ({ps}) Bool\n  {post})\n"
    out += f"(inv-constraint {inv} pre-f trans-f post-f)\n(check-synth)\n"
    return out


AT = {
    "at_counter.sl": inv_file(["x"], "(= x 0)", "(and (<= x 10) (= x! (+ x 1)))", "(<= x 11)"),
    "at_counter_exact.sl": inv_file(["x"], "(= x 0)", "(and (< x 10) (= x! (+ x 1)))", "(=> (>= x 10) (= x 10))"),
    "at_counter_ite.sl": inv_file(["x"], "(= x 0)", "(= x! (ite (< x 20) (+ x 1) x))", "(and (>= x 0) (<= x 20))"),
    "at_countdown.sl": inv_file(["x"], "(= x 100)", "(and (> x 0) (= x! (- x 1)))", "(>= x 0)"),
    "at_two_phase.sl": inv_file(
        ["x", "y"],
        "(and (= x 0) (= y 0))",
        "(or (and (< x 10) (= x! (+ x 1)) (= y! y)) (and (>= x 10) (< y 10) (= x! x) (= y! (+ y 1))))",
        "(and (<= x 10) (<= y 10))",
    ),
    "at_three_phase.sl": inv_file(
        ["x", "y", "z"],
        "(and (= x 0) (= y 0) (= z 0))",
        "(or (and (< x 5) (= x! (+ x 1)) (= y! y) (= z! z))"
        " (and (>= x 5) (< y 5) (= x! x) (= y! (+ y 1)) (= z! z))"
        " (and (>= x 5) (>= y 5) (< z 5) (= x! x) (= y! y) (= z! (+ z 1))))",
        "(and (<= x 5) (<= y 5) (<= z 5))",
    ),
    "at_symbolic_n.sl": inv_file(
        ["x", "n"], "(and (= x 0) (>= n 0))", "(and (< x n) (= x! (+ x 1)) (= n! n))", "(=> (>= x n) (= x n))"
    ),
    "at_symbolic_countdown.sl": inv_file(
        ["x", "n"], "(and (= x n) (>= n 0))", "(and (> x 0) (= x! (- x 1)) (= n! n))", "(and (>= x 0) (<= x n))"
    ),
    "at_lockstep.sl": inv_file(
        ["x", "y"], "(and (= x 0) (= y 0))", "(and (< x 10) (= x! (+ x 1)) (= y! (+ y 1)))", "(= x y)"
    ),
    "at_stutter.sl": inv_file(["x"], "(>= x 5)", "(= x! x)", "(>= x 0)"),
    "at_even_unbounded.sl": inv_file(["x"], "(= x 0)", "(= x! (+ x 2))", "(>= x 0)"),
    "at_nosolution_counter.sl": inv_file(["x"], "(= x 0)", "(and (<= x 10) (= x! (+ x 1)))", "(<= x 10)"),
    "at_nosolution_false_post.sl": inv_file(["x"], "true", "(= x! x)", "false"),
    "at_nosolution_two_phase.sl": inv_file(
        ["x", "y"],
        "(and (= x 0) (= y 0))",
        "(or (and (< x 10) (= x! (+ x 1)) (= y! y)) (and (>= x 10) (< y 10) (= x! x) (= y! (+ y 1))))",
        "(<= y 9)",
    ),
    "at_explicit_constraints.sl": """(set-logic LIA)
(synth-fun inv ((x Int) (y Int)) Bool)
(declare-var x Int)
(declare-var y Int)
(declare-var x1 Int)
(declare-var y1 Int)
(constraint (=> (and (= x 0) (= y 5)) (inv x y)))
(constraint (=> (and (inv x y) (< x 5) (= x1 (+ x 1)) (= y1 (- y 1))) (inv x1 y1)))
(constraint (=> (inv x y) (= (+ x y) 5)))
(check-synth)
""",
}

GENERAL = {
    "gen_double_sum.sl": """(set-logic LIA)
(synth-fun f ((x Int)) Int)
(declare-var x Int)
(constraint (= (+ (f x) (f x)) (* 4 x)))
(check-synth)
""",
    "gen_successor.sl": """(set-logic LIA)
(synth-fun f ((x Int)) Int)
(declare-var x Int)
(constraint (= (f (+ x 1)) (+ (f x) 1)))
(constraint (= (f 0) 3))
(check-synth)
""",
    "gen_nonunit.sl": """(set-logic LIA)
(synth-fun f ((x Int)) Int)
(declare-var x Int)
(constraint (=> (>= x 0) (>= (* 2 (f x)) x)))
(constraint (<= (f x) x))
(check-synth)
""",
    "gen_max2_pair.sl": """(set-logic LIA)
(synth-fun f ((a Int) (b Int)) Int)
(declare-var x Int)
(declare-var y Int)
(constraint (>= (f x y) x))
(constraint (>= (f x y) y))
(constraint (or (= (f x y) x) (= (f x y) y)))
(constraint (= (f x y) (f y x)))
(constraint (>= (f x x) x))
(check-synth)
""",
    "inv_cyclic.sl": inv_file(
        ["x"],
        "(= x 0)",
        "(or (and (<= x 5) (= x! (+ x 1))) (and (>= x 6) (<= x 10) (= x! (- x 1))))",
        "(and (>= x 0) (<= x 6))",
    ),
    "inv_doubling.sl": inv_file(["x"], "(= x 1)", "(= x! (* 2 x))", "(>= x 1)"),
    "inv_step3_fallback.sl": inv_file(["x"], "(= x 1)", "(= x! (ite (<= x 99) (+ x 3) x))", "(<= x 102)"),
}

EXCLUDED = {
    "multi_synth.sl": (
        "two synth-fun commands; one unknown function per problem is supported",
        """(set-logic LIA)
(synth-fun f ((x Int)) Int)
(synth-fun g ((x Int)) Int)
(declare-var x Int)
(constraint (= (f x) (g x)))
(check-synth)
""",
    ),
    "bitvector_logic.sl": (
        "logic BV is outside linear integer arithmetic",
        """(set-logic BV)
(synth-fun f ((x (_ BitVec 8))) (_ BitVec 8))
(check-synth)
""",
    ),
    "let_binding.sl": (
        "let-bindings are not supported",
        """(set-logic LIA)
(synth-fun f ((x Int)) Int)
(declare-var x Int)
(constraint (let ((y (f x))) (>= y x)))
(check-synth)
""",
    ),
}


def corpus() -> dict[str, str]:
    files = {}
    for n in range(2, 21):
        files[f"ssi/fg_max{n}.sl"] = fg_max(n)
        files[f"ssi/fg_array_search_{n}.sl"] = fg_array_search(n)
    for n, bound in ((2, 5), (2, 15), (3, 5), (3, 15), (4, 5)):
        files[f"ssi/fg_array_sum_{n}_{bound}.sl"] = fg_array_sum(n, bound)
    for name, text in SSI_MISC.items():
        files[f"ssi/{name}"] = text
    for name, text in SSI_COMM.items():
        files[f"ssi_comm/{name}"] = text
    for name, text in AT.items():
        files[f"at/{name}"] = text
    for name, text in GENERAL.items():
        files[f"general/{name}"] = text
    for name, (_, text) in EXCLUDED.items():
        files[f"excluded/{name}"] = text
    return files


def exclusion_list() -> str:
    lines = ["# Corpus files the reader rejects on purpose: path<TAB>reason"]
    lines += [f"excluded/{name}\t{reason}" for name, (reason, _) in EXCLUDED.items()]
    return "\n".join(lines) + "\n"


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=ROOT)
    args = ap.parse_args(argv)
    for rel, text in corpus().items():
        path = args.out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    (args.out / "EXCLUDED.txt").write_text(exclusion_list())


if __name__ == "__main__":
    main()
