"""Shared fixtures and the acceptance-summary reporter."""

import time

import pytest

# (criterion label, passed, detail, elapsed seconds), filled by test_acceptance
ACCEPTANCE_LOG: list[tuple[str, bool, str, float]] = []


def record_criterion(label: str, passed: bool, detail: str, t0: float) -> None:
    ACCEPTANCE_LOG.append((label, passed, detail, time.time() - t0))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail, elapsed in ACCEPTANCE_LOG:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(
            f"[{status}] {label} ({elapsed:.1f}s) {detail}"
        )


@pytest.fixture(scope="session")
def standard_grid():
    return [(1.0, 1.0), (0.5, 0.5), (2.0, 1.0), (1.0, 3.0), (3.0, 3.0)]
