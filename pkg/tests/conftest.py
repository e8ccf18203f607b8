import pytest

from cpmss.codebook import build_codebook
from cpmss.cpm import CpmConfig


@pytest.fixture(scope="session")
def cb6():
    return build_codebook(6)


@pytest.fixture(scope="session")
def msk():
    return CpmConfig.msk()


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def verdict(request):
    """Record one pass/fail line for an acceptance criterion, then assert it."""
    lines = request.config._acceptance_lines

    def record(number: int, title: str, ok: bool, detail: str) -> None:
        line = f"criterion {number:>2} {title}: {'PASS' if ok else 'FAIL'} | {detail}"
        lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
