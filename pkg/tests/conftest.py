import pytest

VERDICTS: list[str] = []


@pytest.fixture()
def verdict():
    """Record a one-line PASS/FAIL verdict for the acceptance summary, then assert it."""

    def record(number: int, name: str, ok: bool, detail: str = "") -> None:
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip()
        print(line)
        VERDICTS.append(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(VERDICTS):
            terminalreporter.write_line(line)
