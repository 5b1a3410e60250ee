"""Exception hierarchy shared by every engine."""


class ConcSynthError(Exception):
    pass


class ParseError(ConcSynthError):
    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.message = message


class UnsupportedLogic(ConcSynthError):
    pass


class UnsupportedProblem(ConcSynthError):
    """Input is well formed but outside the supported fragment."""


class UngroundedTerm(ConcSynthError):
    pass


class NonLinear(ConcSynthError):
    pass


class SizeLimitExceeded(ConcSynthError):
    pass


class SolverSpawnError(ConcSynthError):
    pass


class ProtocolError(ConcSynthError):
    def __init__(self, message: str, raw: str = ""):
        super().__init__(message if not raw else f"{message}: {raw!r}")
        self.raw = raw


class Cancelled(ConcSynthError):
    pass


class Timeout(ConcSynthError):
    pass


class EngineInconclusive(ConcSynthError):
    pass


class HeightBudgetExhausted(ConcSynthError):
    pass


class NonUnitCoefficient(ConcSynthError):
    pass


class NonLinearInVar(ConcSynthError):
    pass


class NotTranslational(ConcSynthError):
    pass


class Cyclic(ConcSynthError):
    pass


class FallbackRequired(ConcSynthError):
    """A fragment engine could not finish soundly; the caller should use concolic search."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class NoSolution(ConcSynthError):
    """Raised when an engine proves that the synthesis problem has no solution.

    ``witness`` maps variable names to the integer point that refutes every
    candidate.
    """

    def __init__(self, message: str, witness: dict | None = None, evidence=None):
        super().__init__(message)
        self.witness = witness
        self.evidence = evidence
