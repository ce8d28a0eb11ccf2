import time

import pytest

from attitrack.sim import builtin_scenario, run_scenario


class ScenarioCache:
    """Runs each built-in scenario at most once per test session."""

    def __init__(self):
        self._runs = {}

    def get(self, number):
        if number not in self._runs:
            t0 = time.perf_counter()
            log = run_scenario(builtin_scenario(number))
            self._runs[number] = (log, time.perf_counter() - t0)
        return self._runs[number]

    def log(self, number):
        return self.get(number)[0]

    def seconds(self, number):
        return self.get(number)[1]


@pytest.fixture(scope="session")
def scenarios():
    return ScenarioCache()


_ACCEPTANCE = {}


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line for an acceptance criterion."""

    def record(number, checks, seconds, limit):
        checks = dict(checks, runtime=seconds < limit)
        ok = all(checks.values())
        failed = [k for k, v in checks.items() if not v]
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} ({seconds:.2f} s of {limit} s)"
        if failed:
            line += "  failed: " + ", ".join(failed)
        _ACCEPTANCE[number] = line
        print(line)
        return ok, failed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[n])
