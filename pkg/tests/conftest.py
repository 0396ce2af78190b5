import pytest

# Lines recorded by the acceptance tests, printed once at the end of the run.
ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one check: ``report(criterion, label, ok, detail)``; returns ``ok``."""

    def _report(criterion, label, ok, detail=""):
        ACCEPTANCE_LINES.append((criterion, label, bool(ok), detail))
        return bool(ok)

    return _report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted({c for c, *_ in ACCEPTANCE_LINES}):
        rows = [r for r in ACCEPTANCE_LINES if r[0] == crit]
        ok = all(r[2] for r in rows)
        tr.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'}")
        for _, label, passed, detail in rows:
            tr.write_line(f"    [{'pass' if passed else 'FAIL'}] {label}  {detail}")
