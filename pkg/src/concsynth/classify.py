"""Sort problems into the fragments that have dedicated decision procedures."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from . import at, ssi
from .errors import ConcSynthError
from .smt import SmtSession


class Fragment(Enum):
    SSI = "SSI"
    SSI_COMMUTATIVE = "SSI_Commutative"
    AT = "AT"
    GENERAL = "General"


@dataclass
class ProblemClass:
    tag: Fragment
    invocation: tuple | None = None
    inv: at.InvProblem | None = None
    graph: at.TransitionGraph | None = None
    reason: str = ""

    @property
    def is_ssi(self) -> bool:
        return self.tag in (Fragment.SSI, Fragment.SSI_COMMUTATIVE)


def classify(p, session: SmtSession | None = None) -> ProblemClass:
    """Fragment of ``p``; never raises, falling back to General with a reason."""
    if p.track == "INV":
        own = session is None
        s = session or SmtSession()
        try:
            ip = at.detect_translational(p, s)
            g = at.build_graph(ip.branches, ip.state_vars, s)
            return ProblemClass(Fragment.AT, inv=ip, graph=g)
        except ConcSynthError as exc:
            return ProblemClass(Fragment.GENERAL, reason=f"{type(exc).__name__}: {exc}")
        finally:
            if own:
                s.close()
    if p.arity == 2 and not p.is_bool and ssi.commutative_subspec(p.spec, p.fname) is not None:
        return ProblemClass(Fragment.SSI_COMMUTATIVE)
    args = ssi.single_invocation(p.spec, p.fname)
    if args is not None:
        return ProblemClass(Fragment.SSI, invocation=args)
    return ProblemClass(Fragment.GENERAL, reason="not single-invocation")


def category(p, cls: ProblemClass) -> str:
    if p.track == "INV":
        return "INV(AT)" if cls.tag is Fragment.AT else "INV(non-AT)"
    return "CLIA(SSI)" if cls.is_ssi else "CLIA(non-SSI)"
