import json
import time
from importlib import resources
from pathlib import Path

import pytest

FIXTURES = Path(str(resources.files("renormkit").joinpath("fixtures")))


def fixture_json(name: str):
    return json.loads((FIXTURES / name).read_text())


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


# -- acceptance summary ----------------------------------------------------------

ACCEPTANCE: dict = {}  # criterion number -> (ok, detail)
SESSION_LIMIT = 120.0


def pytest_sessionstart(session):
    session.config._renorm_start = time.perf_counter()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    elapsed = time.perf_counter() - config._renorm_start
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        tr.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    ok = elapsed < SESSION_LIMIT
    tr.write_line(f"full suite wall-clock: {elapsed:.1f} s (limit {SESSION_LIMIT:.0f} s) "
                  f"{'PASS' if ok else 'FAIL'}")


def pytest_sessionfinish(session, exitstatus):
    start = getattr(session.config, "_renorm_start", None)
    if ACCEPTANCE and start is not None and time.perf_counter() - start >= SESSION_LIMIT:
        session.exitstatus = 1
