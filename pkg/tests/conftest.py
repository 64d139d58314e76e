from importlib import resources
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo", derandomize=True, deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def sample_csv() -> Path:
    return Path(str(resources.files("stockcast") / "fixtures" / "sample.csv"))


CRITERIA = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[CRITERIA] = []


@pytest.fixture
def verdict(request):
    """Record one acceptance line, print it, and fail the test when the criterion is not met."""

    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.stash[CRITERIA].append(line)
        print(line)
        assert ok, line

    def skip(number: int, reason: str):
        line = f"criterion {number:>2}: SKIP  {reason}"
        request.config.stash[CRITERIA].append(line)
        print(line)
        pytest.skip(reason)

    record.skip = skip
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
