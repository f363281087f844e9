import os
import sys

import pytest
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

from freecensus.words import free_reduce  # noqa: E402


def raw_words(rank, max_size=20):
    letters = [x for x in range(-rank, rank + 1) if x]
    return st.lists(st.sampled_from(letters), max_size=max_size)


def reduced_words(rank, min_size=0, max_size=20):
    return raw_words(rank, max_size).map(free_reduce).filter(lambda w: len(w) >= min_size)


@pytest.fixture
def tmp_cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
