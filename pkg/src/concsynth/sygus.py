"""Reader for the SyGuS subset used by the CLIA and INV tracks, and solution printer.

Supported commands: ``set-logic`` (LIA only), ``synth-fun``, ``synth-inv``,
``declare-var``, ``declare-primed-var``, ``declare-fun`` (nullary),
``define-fun`` (inlined as a macro), ``constraint``, ``inv-constraint``,
``check-synth``; ``set-option``/``set-info`` are skipped.  Grammars attached
to ``synth-fun``/``synth-inv`` are recorded but not enforced.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import clia
from .clia import (
    FALSE,
    TRUE,
    App,
    AppB,
    BoolConst,
    Cond,
    Const,
    Geq,
    Ite,
    Lin,
    Mul,
    Term,
    Var,
    conj,
    disj,
    implies,
    iff,
    is_term,
    negate,
)
from .errors import ConcSynthError, ParseError, UnsupportedLogic, UnsupportedProblem
from .printer import to_sexpr
from .sexpr import SList, String, Symbol, parse_all, position

log = logging.getLogger(__name__)

SUPPORTED_LOGICS = {"LIA", "QF_LIA"}
PRIME = "!"


@dataclass(frozen=True)
class InvParts:
    pre: Cond
    post: Cond
    trans_rel: Cond
    state_vars: tuple
    primed_vars: tuple
    trans: tuple | None = None  # functional form, one term per state variable


@dataclass
class SynthProblem:
    """``exists f. forall vars. spec``.

    ``verify_spec``/``verify_vars`` are what solutions are finally checked
    against; they differ from ``spec``/``vars`` only for invariant problems,
    where ``spec`` uses the functional transition and the verification keeps
    the original transition relation over primed variables.
    """

    fname: str
    params: tuple
    return_sort: str
    vars: tuple
    spec: Cond
    track: str = "CLIA"
    inv_parts: InvParts | None = None
    verify_spec: Cond | None = None
    verify_vars: tuple | None = None
    grammar: object = None
    source: str | None = None
    warnings: list = field(default_factory=list)

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def is_bool(self) -> bool:
        return self.return_sort == "Bool"

    @property
    def check_spec(self) -> Cond:
        return self.verify_spec if self.verify_spec is not None else self.spec

    @property
    def check_vars(self) -> tuple:
        return self.verify_vars if self.verify_vars is not None else self.vars

    @property
    def name(self) -> str:
        return Path(self.source).stem if self.source else self.fname


@dataclass
class _Macro:
    params: tuple
    sorts: tuple
    sort: str
    body: object


class _Reader:
    def __init__(self, strict_grammar: bool = False):
        self.strict_grammar = strict_grammar
        self.logic: str | None = None
        self.fname: str | None = None
        self.params: tuple = ()
        self.return_sort = "Int"
        self.grammar = None
        self.is_inv = False
        self.vars: list[str] = []
        self.primed: dict[str, str] = {}
        self.macros: dict[str, _Macro] = {}
        self.constraints: list = []
        self.raw_constraints: list = []
        self.inv_constraint = None
        self.saw_check = False
        self.warnings: list[str] = []

    # -- commands ---------------------------------------------------------

    def command(self, cmd) -> None:
        if not isinstance(cmd, SList) or not cmd or not isinstance(cmd[0], Symbol):
            self.fail(cmd, "expected a command")
        head = str(cmd[0])
        handler = getattr(self, "cmd_" + head.replace("-", "_"), None)
        if handler is None:
            self.fail(cmd, f"unsupported command {head}")
        handler(cmd)

    def cmd_set_logic(self, cmd) -> None:
        self.expect_len(cmd, 2)
        self.logic = str(cmd[1])
        if self.logic not in SUPPORTED_LOGICS:
            raise UnsupportedLogic(f"logic {self.logic} is not supported (LIA only)")

    def cmd_set_option(self, cmd) -> None:
        pass

    cmd_set_info = cmd_set_option

    def cmd_check_synth(self, cmd) -> None:
        self.saw_check = True

    def _synth_header(self, cmd, name, params_sx, sort, grammar) -> None:
        if self.fname is not None:
            raise UnsupportedProblem("only one synthesized function per problem is supported")
        self.fname = str(name)
        params = []
        for p in params_sx:
            if not isinstance(p, SList) or len(p) != 2:
                self.fail(p, "expected (name Sort)")
            if str(p[1]) != "Int":
                raise UnsupportedProblem(f"parameter {p[0]} has sort {p[1]}; only Int is supported")
            params.append(str(p[0]))
        self.params = tuple(params)
        self.return_sort = str(sort)
        if self.return_sort not in ("Int", "Bool"):
            raise UnsupportedProblem(f"return sort {sort} is not supported")
        if grammar is not None:
            self.grammar = grammar
            msg = f"grammar of {name} is not enforced; searching all of CLIA"
            self.warnings.append(msg)
            log.warning(msg)
            if self.strict_grammar:
                self._check_grammar(grammar)

    def _check_grammar(self, grammar) -> None:
        flat = set()
        stack = [grammar]
        while stack:
            x = stack.pop()
            if isinstance(x, list):
                stack.extend(x)
            else:
                flat.add(str(x))
        needs_ite = self.return_sort == "Int"
        if (needs_ite and "ite" not in flat) or not flat & {">=", "<=", ">", "<"}:
            raise UnsupportedProblem("grammar excludes ite or comparisons (--strict-grammar)")

    def cmd_synth_fun(self, cmd) -> None:
        if len(cmd) not in (4, 5):
            self.fail(cmd, "synth-fun expects a name, parameters, a sort and an optional grammar")
        self._synth_header(cmd, cmd[1], cmd[2], cmd[3], cmd[4] if len(cmd) == 5 else None)

    def cmd_synth_inv(self, cmd) -> None:
        if len(cmd) not in (3, 4):
            self.fail(cmd, "synth-inv expects a name, parameters and an optional grammar")
        self._synth_header(cmd, cmd[1], cmd[2], "Bool", cmd[3] if len(cmd) == 4 else None)
        self.is_inv = True

    def _declare(self, cmd, name, sort) -> None:
        if str(sort) != "Int":
            raise UnsupportedProblem(f"variable {name} has sort {sort}; only Int is supported")
        if not isinstance(name, Symbol):
            self.fail(cmd, "expected a variable name")
        if str(name) in self.vars:
            self.fail(cmd, f"variable {name} declared twice")
        self.vars.append(str(name))

    def cmd_declare_var(self, cmd) -> None:
        self.expect_len(cmd, 3)
        self._declare(cmd, cmd[1], cmd[2])

    def cmd_declare_primed_var(self, cmd) -> None:
        self.expect_len(cmd, 3)
        self._declare(cmd, cmd[1], cmd[2])
        primed = Symbol(str(cmd[1]) + PRIME, *position(cmd[1]))
        self._declare(cmd, primed, cmd[2])
        self.primed[str(cmd[1])] = str(primed)

    def cmd_declare_fun(self, cmd) -> None:
        self.expect_len(cmd, 4)
        if cmd[2]:
            raise UnsupportedProblem("uninterpreted functions are not supported")
        self._declare(cmd, cmd[1], cmd[3])

    def cmd_define_fun(self, cmd) -> None:
        self.expect_len(cmd, 5)
        name = str(cmd[1])
        params, sorts = [], []
        for p in cmd[2]:
            if not isinstance(p, SList) or len(p) != 2:
                self.fail(p, "expected (name Sort)")
            params.append(str(p[0]))
            sorts.append(str(p[1]))
        if any(s != "Int" for s in sorts):
            raise UnsupportedProblem(f"define-fun {name}: only Int parameters are supported")
        body = self.expr(cmd[4], set(params))
        sort = str(cmd[3])
        if (sort == "Bool") == is_term(body):
            self.fail(cmd, f"body of {name} does not have sort {sort}")
        self.macros[name] = _Macro(tuple(params), tuple(sorts), sort, body)

    def cmd_constraint(self, cmd) -> None:
        self.expect_len(cmd, 2)
        c = self.expr(cmd[1])
        if is_term(c):
            self.fail(cmd, "constraint must be Bool")
        self.constraints.append(c)
        self.raw_constraints.append(cmd[1])

    def cmd_inv_constraint(self, cmd) -> None:
        self.expect_len(cmd, 5)
        self.inv_constraint = cmd

    # -- expressions ------------------------------------------------------

    def expr(self, sx, local: set | None = None):
        local = local or set()
        if isinstance(sx, bool):
            return BoolConst(sx)
        if isinstance(sx, int):
            return Const(sx)
        if isinstance(sx, String):
            self.fail(sx, "string literals are not supported")
        if isinstance(sx, Symbol):
            s = str(sx)
            if s == "true":
                return TRUE
            if s == "false":
                return FALSE
            if s in local or s in self.vars:
                return Var(s)
            if s in self.macros and not self.macros[s].params:
                return self.macros[s].body
            if s == self.fname and not self.params:
                return AppB(s, ()) if self.return_sort == "Bool" else App(s, ())
            self.fail(sx, f"unknown symbol {s}")
        if not isinstance(sx, SList) or not sx:
            self.fail(sx, "empty expression")
        head = sx[0]
        if isinstance(head, SList):
            self.fail(sx, "higher-order application is not supported")
        op = str(head)
        if op == "let":
            raise UnsupportedProblem("let-bindings are not supported")
        args = sx[1:]
        if op == "=" and len(args) == 2:
            mod = self._mod_eq(args, local)
            if mod is not None:
                return mod
        sub = [self.expr(a, local) for a in args]
        return self.apply(sx, op, sub)

    def _mod_eq(self, args, local):
        for a, b in (args, args[::-1]):
            if (
                isinstance(a, SList)
                and len(a) == 3
                and str(a[0]) == "mod"
                and isinstance(a[2], int)
                and isinstance(b, int)
            ):
                t = self.expr(a[1], local)
                m = a[2]
                if m <= 0:
                    self.fail(a, "modulus must be a positive numeral")
                if not 0 <= b < m:
                    return FALSE
                try:
                    return clia.mod_eq(clia.linearize(t), m, b)
                except ConcSynthError:
                    return clia.ModEq(t, m, b)
        return None

    def apply(self, sx, op: str, a: list):
        def terms():
            for x in a:
                if not is_term(x):
                    self.fail(sx, f"{op} expects Int arguments")
            return a

        def conds():
            for x in a:
                if is_term(x):
                    self.fail(sx, f"{op} expects Bool arguments")
            return a

        def arity(n):
            if len(a) != n:
                self.fail(sx, f"{op} expects {n} arguments, got {len(a)}")

        if op == "+":
            return clia.add(*terms())
        if op == "-":
            ts = terms()
            if not ts:
                self.fail(sx, "- expects arguments")
            if len(ts) == 1:
                if isinstance(ts[0], Const):
                    return Const(-ts[0].value)
                return Mul(-1, ts[0])
            out = ts[0]
            for t in ts[1:]:
                out = clia.sub(out, t)
            return out
        if op == "*":
            ts = terms()
            if not ts:
                self.fail(sx, "* expects arguments")
            out = ts[0]
            for t in ts[1:]:
                k = _constant_value(out)
                if k is not None:
                    out = Mul(k, t)
                    continue
                k = _constant_value(t)
                if k is None:
                    raise UnsupportedProblem(f"non-linear multiplication at {position(sx)}")
                out = Mul(k, out)
            return out
        if op in ("div", "mod", "abs"):
            if op == "abs":
                arity(1)
                t = terms()[0]
                return Ite(Geq(t, Const(0)), t, Mul(-1, t))
            raise UnsupportedProblem(f"{op} is only supported as (= (mod t m) r)")
        if op == "ite":
            arity(3)
            c, t, e = a
            if is_term(c):
                self.fail(sx, "ite condition must be Bool")
            if is_term(t) != is_term(e):
                self.fail(sx, "ite branches have different sorts")
            return Ite(c, t, e) if is_term(t) else clia.CondIte(c, t, e)
        if op in (">=", "<=", ">", "<"):
            ts = terms()
            if len(ts) < 2:
                self.fail(sx, f"{op} expects at least 2 arguments")
            rel = {">=": Geq, "<=": clia.le, ">": clia.gt, "<": clia.lt}[op]
            return conj(*(rel(x, y) for x, y in zip(ts, ts[1:])))
        if op == "=":
            if len(a) < 2:
                self.fail(sx, "= expects at least 2 arguments")
            if all(is_term(x) for x in a):
                return conj(*(clia.eq(x, y) for x, y in zip(a, a[1:])))
            return conj(*(iff(x, y) for x, y in zip(conds(), a[1:])))
        if op == "distinct":
            arity(2)
            if all(is_term(x) for x in a):
                return negate(clia.eq(*a))
            return negate(iff(*conds()))
        if op == "and":
            return conj(*conds())
        if op == "or":
            return disj(*conds())
        if op == "not":
            arity(1)
            return negate(conds()[0])
        if op == "=>":
            cs = conds()
            if len(cs) < 2:
                self.fail(sx, "=> expects at least 2 arguments")
            out = cs[-1]
            for c in reversed(cs[:-1]):
                out = implies(c, out)
            return out
        if op == "xor":
            arity(2)
            x, y = conds()
            return negate(iff(x, y))
        if op == self.fname:
            if len(a) != len(self.params):
                self.fail(sx, f"{op} expects {len(self.params)} arguments, got {len(a)}")
            ts = tuple(terms())
            return AppB(op, ts) if self.return_sort == "Bool" else App(op, ts)
        if op in self.macros:
            m = self.macros[op]
            if len(a) != len(m.params):
                self.fail(sx, f"{op} expects {len(m.params)} arguments, got {len(a)}")
            return clia.substitute(m.body, dict(zip(m.params, terms())))
        self.fail(sx, f"unknown function {op}")

    # -- helpers ----------------------------------------------------------

    def fail(self, sx, message: str):
        line, col = position(sx)
        raise ParseError(line, col, message)

    def expect_len(self, cmd, n: int) -> None:
        if len(cmd) != n:
            self.fail(cmd, f"{cmd[0]} expects {n - 1} arguments")

    # -- assembly ---------------------------------------------------------

    def build(self, source: str | None) -> SynthProblem:
        if self.fname is None:
            raise ParseError(1, 1, "no synth-fun or synth-inv")
        if self.logic is None:
            self.warnings.append("no set-logic; assuming LIA")
        if self.inv_constraint is not None:
            return self._build_inv_from_command(source)
        inv = self._match_inv_shape() if self.return_sort == "Bool" else None
        if inv is not None:
            return self._assemble_inv(inv, source)
        spec = conj(*self.constraints)
        used = clia.free_vars(spec)
        return SynthProblem(
            fname=self.fname,
            params=self.params,
            return_sort=self.return_sort,
            vars=tuple(v for v in self.vars if v in used) or tuple(self.vars),
            spec=spec,
            grammar=self.grammar,
            source=source,
            warnings=self.warnings,
        )

    def _build_inv_from_command(self, source) -> SynthProblem:
        cmd = self.inv_constraint
        inv, pre, trans, post = (str(x) for x in cmd[1:])
        if inv != self.fname:
            self.fail(cmd, f"inv-constraint names {inv}, but the synthesized function is {self.fname}")
        state = [v for v in self.vars if v in self.primed]
        if not state:
            state = list(self.vars[: len(self.params)])
            primed = [v + PRIME for v in state]
            for p in primed:
                if p not in self.vars:
                    self.vars.append(p)
        else:
            primed = [self.primed[v] for v in state]
        if len(state) != len(self.params):
            self.fail(cmd, f"{inv} has {len(self.params)} parameters but {len(state)} state variables are declared")
        for name in (pre, trans, post):
            if name not in self.macros:
                self.fail(cmd, f"unknown function {name}")
        sv = [Var(v) for v in state]
        pv = [Var(v) for v in primed]
        pre_c = self._call_macro(cmd, pre, sv)
        post_c = self._call_macro(cmd, post, sv)
        trans_m = self.macros[trans]
        if len(trans_m.params) == 2 * len(state):
            trans_c = self._call_macro(cmd, trans, sv + pv)
        else:
            self.fail(cmd, f"{trans} must take {2 * len(state)} parameters")
        return self._assemble_inv((pre_c, trans_c, post_c, tuple(state), tuple(primed)), source)

    def _call_macro(self, cmd, name, args):
        m = self.macros[name]
        if len(m.params) != len(args):
            self.fail(cmd, f"{name} expects {len(m.params)} parameters")
        return clia.substitute(m.body, dict(zip(m.params, args)))

    def _match_inv_shape(self):
        """Recognise ``(=> pre (inv x))``, ``(=> (and (inv x) trans) (inv x'))``, ``(=> (inv x) post)``."""
        if len(self.raw_constraints) != 3:
            return None
        f = self.fname

        def inv_args(sx):
            if (
                isinstance(sx, SList)
                and sx
                and str(sx[0]) == f
                and all(isinstance(a, Symbol) and str(a) in self.vars for a in sx[1:])
                and len(set(map(str, sx[1:]))) == len(sx) - 1 == len(self.params)
            ):
                return tuple(str(a) for a in sx[1:])
            return None

        def mentions(sx):
            if isinstance(sx, SList):
                return any(mentions(x) for x in sx)
            return str(sx) == f

        pre = trans = post = None
        state = primed = None
        for sx in self.raw_constraints:
            if not (isinstance(sx, SList) and len(sx) == 3 and str(sx[0]) == "=>"):
                return None
            lhs, rhs = sx[1], sx[2]
            if inv_args(rhs) is not None and not mentions(lhs):
                pre = (lhs, inv_args(rhs))
            elif inv_args(lhs) is not None and not mentions(rhs):
                post = (rhs, inv_args(lhs))
            elif inv_args(rhs) is not None and isinstance(lhs, SList) and str(lhs[0]) == "and":
                invs = [x for x in lhs[1:] if inv_args(x) is not None]
                rest = [x for x in lhs[1:] if inv_args(x) is None]
                if len(invs) != 1 or any(mentions(x) for x in rest):
                    return None
                state, primed = inv_args(invs[0]), inv_args(rhs)
                trans = rest
            else:
                return None
        if pre is None or post is None or trans is None:
            return None
        if pre[1] != state or post[1] != state or set(state) & set(primed):
            return None
        pre_c = self.expr(pre[0])
        post_c = self.expr(post[0])
        trans_c = conj(*(self.expr(x) for x in trans))
        return pre_c, trans_c, post_c, state, primed

    def _assemble_inv(self, parts, source) -> SynthProblem:
        pre_c, trans_c, post_c, state, primed = parts
        inv = self.fname
        sv = tuple(Var(v) for v in state)
        pv = tuple(Var(v) for v in primed)
        functional = extract_function(trans_c, state, primed)
        verify_spec = conj(
            implies(pre_c, AppB(inv, sv)),
            implies(conj(AppB(inv, sv), trans_c), AppB(inv, pv)),
            implies(AppB(inv, sv), post_c),
        )
        verify_vars = tuple(state) + tuple(primed)
        if functional is not None:
            spec = conj(
                implies(pre_c, AppB(inv, sv)),
                implies(AppB(inv, sv), AppB(inv, functional)),
                implies(AppB(inv, sv), post_c),
            )
            vars_ = tuple(state)
        else:
            self.warnings.append("transition relation is not functional; keeping relational form")
            spec, vars_ = verify_spec, verify_vars
        return SynthProblem(
            fname=inv,
            params=self.params,
            return_sort="Bool",
            vars=vars_,
            spec=spec,
            track="INV",
            inv_parts=InvParts(pre_c, post_c, trans_c, tuple(state), tuple(primed), functional),
            verify_spec=verify_spec,
            verify_vars=verify_vars,
            grammar=self.grammar,
            source=source,
            warnings=self.warnings,
        )


def _constant_value(t: Term) -> int | None:
    try:
        lin = clia.linearize(t)
    except ConcSynthError:
        return None
    return lin.const if lin.is_const else None


def extract_function(rel: Cond, state, primed) -> tuple | None:
    """Turn a transition relation into one term per state variable.

    Every DNF cube of ``rel`` must pin each primed variable to a linear term over the
    unprimed ones; cubes become an ite chain in order, and states matched by no cube
    stutter.  Returns ``None`` when the relation is not of that shape.
    """
    primed_set = set(primed)
    try:
        cubes = clia.dnf_cubes(rel)
    except ConcSynthError:
        return None
    arms = []
    for cube in cubes:
        guard = []
        lower: dict[str, set] = {p: set() for p in primed}
        upper: dict[str, set] = {p: set() for p in primed}
        for lit in cube:
            mentioned = clia.free_vars(lit) & primed_set
            if not mentioned:
                guard.append(lit)
                continue
            if not isinstance(lit, Geq) or len(mentioned) != 1:
                return None
            (p,) = mentioned
            lin = clia.atom_lin(lit)
            k = lin.coeff(p)
            rest = lin.drop(p)
            if k == 1:
                lower[p].add(-rest)
            elif k == -1:
                upper[p].add(rest)
            else:
                return None
        update = []
        for p in primed:
            if len(lower[p]) != 1 or lower[p] != upper[p]:
                return None
            (value,) = lower[p]
            if set(value.vars()) & primed_set:
                return None
            update.append(value.to_term())
        arms.append((conj(*guard), tuple(update)))
    out = []
    for i, v in enumerate(state):
        t: Term = Var(v)
        for guard, update in reversed(arms):
            if guard == TRUE:
                t = update[i]
            elif update[i] != t:
                t = Ite(guard, update[i], t)
        out.append(t)
    return tuple(out)


def parse(text: str | bytes, source: str | None = None, strict_grammar: bool = False) -> SynthProblem:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    reader = _Reader(strict_grammar=strict_grammar)
    for cmd in parse_all(text):
        reader.command(cmd)
    return reader.build(source)


def parse_file(path, strict_grammar: bool = False) -> SynthProblem:
    path = Path(path)
    return parse(path.read_bytes(), source=str(path), strict_grammar=strict_grammar)


def print_solution(p: SynthProblem, sol) -> str:
    params = " ".join(f"({x} Int)" for x in p.params)
    return f"(define-fun {p.fname} ({params}) {p.return_sort} {to_sexpr(sol)})"


def parse_define_fun(text: str):
    """Read back a ``define-fun``; returns ``(name, params, sort, body)``."""
    items = parse_all(text)
    if len(items) != 1 or not isinstance(items[0], SList) or str(items[0][0]) != "define-fun":
        raise ParseError(1, 1, "expected a single define-fun")
    cmd = items[0]
    reader = _Reader()
    if len(cmd) != 5:
        reader.fail(cmd, "define-fun expects 4 arguments")
    params = tuple(str(p[0]) for p in cmd[2])
    body = reader.expr(cmd[4], set(params))
    return str(cmd[1]), params, str(cmd[3]), body
