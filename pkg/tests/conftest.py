import shutil
import sys
from pathlib import Path

import pytest

from concsynth.smt import SmtSession

ROOT = Path(__file__).resolve().parent.parent
BENCH = ROOT / "benchmarks"

sys.path.insert(0, str(Path(__file__).resolve().parent))
sys.setrecursionlimit(max(sys.getrecursionlimit(), 20_000))


def pytest_collection_modifyitems(config, items):
    if shutil.which("z3") is None:
        skip = pytest.mark.skip(reason="z3 not on PATH")
        for item in items:
            if "session" in item.fixturenames or "smt" in item.keywords:
                item.add_marker(skip)


@pytest.fixture(scope="session")
def session():
    # every model is evaluated against its query while testing
    s = SmtSession(check_models=True)
    s.start()
    yield s
    s.close()


@pytest.fixture
def bench():
    return BENCH


@pytest.fixture(scope="session")
def acceptance_lines(request):
    lines = request.config._acceptance_lines = []
    return lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
