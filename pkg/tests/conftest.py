import pytest

_LINES = []


@pytest.fixture
def acceptance_report():
    """Record one PASS/FAIL line per acceptance criterion, then assert."""
    def report(k, title, rows):
        ok = all(r.passed for r in rows)
        worst = "; ".join(f"{r.name} = {r.value:.4g} ({r.bound})" for r in rows if not r.passed)
        _LINES.append(f"{'PASS' if ok else 'FAIL'}  criterion {k:>2}: {title}"
                      + (f"  [{worst}]" if worst else ""))
        assert ok, "\n".join(r.row() for r in rows)
    return report


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
