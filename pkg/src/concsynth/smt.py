"""SMT-LIB2 client for an external solver process.

Every query is a self-contained script ending in ``(reset)``, so a session
never carries assertions from one query into the next.
"""

from __future__ import annotations

import logging
import os
import select
import shlex
import shutil
import subprocess
import threading
import time
from dataclasses import dataclass, field

from . import clia, difflogic
from .clia import Cond, negate
from .errors import Cancelled, ProtocolError, SolverSpawnError
from .printer import symbol, to_sexpr
from .sexpr import SList, parse_one

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT_MS = 10_000
ENV_SOLVER = "CONCSYNTH_SMT"
ENV_CHECK_MODELS = "CONCSYNTH_CHECK_MODELS"
# Extra wall-clock allowance on top of the solver-side timeout before the child is killed.
GRACE_S = 5.0
# Budget of the first direct attempt in presolve mode.
QUICK_S = 1.0


@dataclass(frozen=True)
class SmtResult:
    status: str  # "sat" | "unsat" | "unknown"
    model: dict = field(default_factory=dict)
    reason: str = ""

    @property
    def is_sat(self) -> bool:
        return self.status == "sat"

    @property
    def is_unsat(self) -> bool:
        return self.status == "unsat"

    @property
    def is_unknown(self) -> bool:
        return self.status == "unknown"


@dataclass(frozen=True)
class Validity:
    """Outcome of a validity check; ``valid`` is None when the solver gave up."""

    valid: bool | None
    witness: dict | None = None
    reason: str = ""


@dataclass(frozen=True)
class FunDef:
    """A function made available to a query through ``define-fun``."""

    params: tuple
    body: object
    sort: str = "Int"


def resolve_solver(path: str | None = None) -> list[str]:
    """Command line for the solver: explicit path, then $CONCSYNTH_SMT, then ``z3`` on PATH."""
    spec = path or os.environ.get(ENV_SOLVER)
    if spec:
        argv = shlex.split(spec)
    else:
        found = shutil.which("z3")
        if found is None:
            raise SolverSpawnError("no SMT solver found; pass --smt-solver or set CONCSYNTH_SMT")
        argv = [found]
    if len(argv) == 1:
        base = os.path.basename(argv[0])
        if "cvc" in base:
            argv += ["--lang", "smt2", "--incremental"]
        else:
            argv += ["-in", "-smt2"]
    return argv


def _env_flag(name: str) -> bool:
    return os.environ.get(name, "").lower() in ("1", "true", "yes", "on")


class SmtSession:
    """One solver child process, owned by one worker."""

    def __init__(
        self,
        solver: str | None = None,
        timeout_ms: int = DEFAULT_TIMEOUT_MS,
        logic: str = "QF_LIA",
        check_models: bool | None = None,
    ):
        self.argv = resolve_solver(solver)
        self.timeout_ms = timeout_ms
        self.logic = logic
        self.check_models = _env_flag(ENV_CHECK_MODELS) if check_models is None else check_models
        self.depth = 0
        self.stats = {"queries": 0, "sat": 0, "unsat": 0, "unknown": 0, "seconds": 0.0, "restarts": 0, "abstraction": 0}
        self._proc: subprocess.Popen | None = None
        self._buf = ""
        self._cancelled = threading.Event()
        self._lock = threading.Lock()

    # -- process management -------------------------------------------------

    def start(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            return
        try:
            self._proc = subprocess.Popen(
                self.argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.STDOUT,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise SolverSpawnError(f"cannot start {self.argv[0]}: {exc}") from exc
        self._buf = ""
        self.depth = 0

    def close(self) -> None:
        with self._lock:
            proc, self._proc = self._proc, None
        if proc is None:
            return
        try:
            if proc.poll() is None:
                try:
                    proc.stdin.write("(exit)\n")
                    proc.stdin.flush()
                except (BrokenPipeError, OSError, ValueError):
                    pass
                try:
                    proc.wait(timeout=1)
                except subprocess.TimeoutExpired:
                    proc.kill()
                    proc.wait()
        finally:
            for stream in (proc.stdin, proc.stdout):
                try:
                    stream.close()
                except (OSError, ValueError):
                    pass

    def restart(self) -> None:
        self._kill()
        self.stats["restarts"] += 1
        self.start()

    def _kill(self) -> None:
        with self._lock:
            proc, self._proc = self._proc, None
        if proc is not None:
            if proc.poll() is None:
                proc.kill()
            proc.wait()
            for stream in (proc.stdin, proc.stdout):
                try:
                    stream.close()
                except (OSError, ValueError):
                    pass

    def interrupt(self) -> None:
        """Cancel the running query (if any) and every later one; safe from other threads."""
        self._cancelled.set()
        with self._lock:
            proc = self._proc
        if proc is not None and proc.poll() is None:
            proc.kill()

    @property
    def cancelled(self) -> bool:
        return self._cancelled.is_set()

    def __enter__(self) -> "SmtSession":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- queries ----------------------------------------------------------

    def script(self, c: Cond, symbols=(), defs: dict | None = None) -> tuple[str, list[str]]:
        names = sorted(clia.free_vars(c) | set(symbols))
        lines = [
            "(set-option :produce-models true)",
            f"(set-option :timeout {int(self.timeout_ms)})",
            f"(set-logic {self.logic})",
        ]
        lines += [f"(declare-const {symbol(n, True)} Int)" for n in names]
        for fname, d in (defs or {}).items():
            params = " ".join(f"({symbol(p, True)} Int)" for p in d.params)
            lines.append(f"(define-fun {symbol(fname, True)} ({params}) {d.sort} {to_sexpr(d.body, True)})")
        lines.append(f"(assert {to_sexpr(c, True)})")
        lines.append("(check-sat)")
        return "\n".join(lines) + "\n", names

    def check_sat(
        self,
        c: Cond,
        symbols=(),
        defs: dict | None = None,
        deadline: float | None = None,
        presolve: bool = False,
    ) -> SmtResult:
        """Satisfiability of ``c``; models cover every free variable plus ``symbols``.

        ``defs`` maps function names to :class:`FunDef` so ``c`` may mention them.
        ``deadline`` (a ``time.monotonic`` value) shortens the solver timeout.
        ``presolve`` is for queries expected to be unsat: a short direct attempt,
        then the difference-logic abstraction, then the direct query again.
        """
        if presolve:
            quick = time.monotonic() + QUICK_S
            r = self.check_sat(c, symbols, defs, quick if deadline is None else min(deadline, quick))
            if not r.is_unknown:
                return r
            ground = c
            for fname, d in (defs or {}).items():
                ground = clia.instantiate(ground, fname, d.params, d.body)
            if difflogic.refute(self, ground, deadline):
                self.stats["abstraction"] += 1
                return SmtResult("unsat", reason="difference abstraction")
        if self.cancelled:
            raise Cancelled("session cancelled")
        self.start()
        timeout_ms = self._budget(deadline)
        if timeout_ms is None:
            return SmtResult("unknown", reason="deadline")
        saved, self.timeout_ms = self.timeout_ms, timeout_ms
        try:
            text, names = self.script(c, symbols, defs)
        finally:
            self.timeout_ms = saved
        t0 = time.monotonic()
        self.stats["queries"] += 1
        try:
            result = self._run(text, names, t0 + timeout_ms / 1000 + GRACE_S)
        finally:
            self.stats["seconds"] += time.monotonic() - t0
        self.stats[result.status] += 1
        if result.is_sat and self.check_models:
            self._audit_model(c, result.model, defs)
        return result

    def check_commands(self, lines: list[str], deadline: float | None = None) -> SmtResult:
        """Run pre-rendered declarations and assertions (no logic set, no model requested)."""
        if self.cancelled:
            raise Cancelled("session cancelled")
        self.start()
        timeout_ms = self._budget(deadline)
        if timeout_ms is None:
            return SmtResult("unknown", reason="deadline")
        text = "\n".join([f"(set-option :timeout {timeout_ms})", *lines, "(check-sat)"]) + "\n"
        t0 = time.monotonic()
        self.stats["queries"] += 1
        try:
            result = self._run(text, [], t0 + timeout_ms / 1000 + GRACE_S)
        finally:
            self.stats["seconds"] += time.monotonic() - t0
        self.stats[result.status] += 1
        return result

    def _budget(self, deadline: float | None) -> int | None:
        if deadline is None:
            return int(self.timeout_ms)
        left = deadline - time.monotonic()
        if left <= 0:
            return None
        return max(1, min(int(self.timeout_ms), int(left * 1000)))

    def _run(self, text: str, names: list[str], wall: float) -> SmtResult:
        self._send(text)
        answer = self._read(wall)
        if answer is None:
            self.restart()
            return SmtResult("unknown", reason="timeout")
        if answer == "unsat":
            self._send("(reset)\n")
            return SmtResult("unsat")
        if answer == "unknown":
            self._send("(get-info :reason-unknown)\n(reset)\n")
            reason = self._read(wall) or "unknown"
            return SmtResult("unknown", reason=reason)
        if answer != "sat":
            raise ProtocolError(f"unexpected reply to check-sat: {answer}", answer)
        if not names:
            self._send("(reset)\n")
            return SmtResult("sat", {})
        self._send(f"(get-value ({' '.join(symbol(n, True) for n in names)}))\n(reset)\n")
        raw = self._read(wall)
        if raw is None:
            self.restart()
            return SmtResult("unknown", reason="timeout")
        return SmtResult("sat", self._parse_values(raw, names))

    def _send(self, text: str) -> None:
        proc = self._proc
        if proc is None:
            raise Cancelled("session cancelled") if self.cancelled else ProtocolError("solver not running")
        try:
            proc.stdin.write(text)
            proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as exc:
            self._proc = None
            if self.cancelled:
                raise Cancelled("session cancelled") from exc
            raise ProtocolError(f"solver closed its input: {exc}") from exc

    def _read(self, wall: float) -> str | None:
        """Next complete reply, or None when ``wall`` passes first."""
        proc = self._proc
        if proc is None:
            raise Cancelled("session cancelled") if self.cancelled else ProtocolError("solver not running")
        fd = proc.stdout.fileno()
        while True:
            item, rest = _split_reply(self._buf)
            if item is not None:
                self._buf = rest
                if item.startswith("(error"):
                    self.restart()
                    raise ProtocolError(f"solver error: {item}", item)
                return item
            left = wall - time.monotonic()
            if left <= 0:
                return None
            ready, _, _ = select.select([fd], [], [], min(left, 0.5))
            if not ready:
                continue
            chunk = os.read(fd, 65536).decode("utf-8", "replace")
            if not chunk:
                self._proc = None
                proc.wait()
                if self.cancelled:
                    raise Cancelled("session cancelled")
                raise ProtocolError(f"solver exited with status {proc.returncode}", self._buf)
            self._buf += chunk

    @staticmethod
    def _parse_values(raw: str, names: list[str]) -> dict:
        try:
            pairs = parse_one(raw)
        except Exception as exc:
            raise ProtocolError(f"cannot parse get-value reply: {exc}", raw) from exc
        model = {}
        for pair in pairs:
            if not isinstance(pair, SList) or len(pair) != 2:
                raise ProtocolError("malformed get-value entry", raw)
            model[str(pair[0])] = _int_value(pair[1], raw)
        missing = set(names) - set(model)
        if missing:
            raise ProtocolError(f"model lacks {sorted(missing)}", raw)
        return model

    def _audit_model(self, c: Cond, model: dict, defs) -> None:
        funcs = None
        if defs:
            funcs = {name: _callable(d) for name, d in defs.items()}
        if not clia.eval_cond(c, model, funcs):
            raise ProtocolError(f"model {model} does not satisfy the query")

    def check_valid(
        self, c: Cond, defs: dict | None = None, deadline: float | None = None, presolve: bool = False
    ) -> Validity:
        r = self.check_sat(negate(c), defs=defs, deadline=deadline, presolve=presolve)
        if r.is_unsat:
            return Validity(True)
        if r.is_sat:
            return Validity(False, r.model)
        return Validity(None, reason=r.reason)


def _callable(d: FunDef):
    def f(*args):
        return clia.evaluate(d.body, dict(zip(d.params, args)))

    return f


def _int_value(v, raw: str) -> int:
    if isinstance(v, int):
        return v
    if isinstance(v, SList) and len(v) == 2 and str(v[0]) == "-" and isinstance(v[1], int):
        return -v[1]
    raise ProtocolError(f"non-integer model value {v!r}", raw)


def _split_reply(buf: str) -> tuple[str | None, str]:
    """Split one complete atom or list off the front of ``buf``."""
    i, n = 0, len(buf)
    while i < n and buf[i].isspace():
        i += 1
    if i == n:
        return None, buf
    if buf[i] != "(":
        j = i
        while j < n and not buf[j].isspace():
            j += 1
        if j == n:
            return None, buf
        return buf[i:j], buf[j:]
    depth = 0
    j = i
    while j < n:
        ch = buf[j]
        if ch == '"':
            j += 1
            while j < n and not (buf[j] == '"' and (j + 1 >= n or buf[j + 1] != '"')):
                j += 2 if buf[j] == '"' else 1
        elif ch == "|":
            j = buf.find("|", j + 1)
            if j < 0:
                return None, buf
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                return buf[i : j + 1], buf[j + 1 :]
        j += 1
    return None, buf
