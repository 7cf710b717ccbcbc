"""Shared pytest plumbing for the acceptance battery.

Acceptance tests register one line each via record_criterion; the terminal
summary prints them in index order so a full run ends with a compact
PASS/FAIL scoreboard and the measured values behind each verdict.
"""

_ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def record_criterion(index: int, name: str, passed: bool, detail: str) -> None:
    _ACCEPTANCE[index] = (name, bool(passed), detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for idx in sorted(_ACCEPTANCE):
        name, passed, detail = _ACCEPTANCE[idx]
        word = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{word}] {idx:2d} {name}: {detail}")
