import os
from pathlib import Path

import pytest

from dtype_osc.cache import SampleCache

ROOT = Path(__file__).resolve().parents[1]


def cache_dir() -> Path:
    """Shared sample cache; the scripts in scripts/ warm the same location."""
    return Path(os.environ.get("OSC_CACHE_DIR", ROOT / ".osc_cache"))


@pytest.fixture(scope="session")
def shared_cache():
    return SampleCache(cache_dir() / "samples.jsonl")


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        def key(line):
            tag = line.split()[1].rstrip(":")
            return (0, int(tag)) if tag.isdigit() else (1, 0)
        for line in sorted(ACCEPTANCE_LINES, key=key):
            terminalreporter.write_line(line)
