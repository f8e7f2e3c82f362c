from fractions import Fraction

import pytest
from hypothesis import settings

from preorderlab import corpus

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

F = Fraction


@pytest.fixture(scope="session")
def models():
    names = ["t1.test", "q1.proc", "q2.proc", "tdiv/tdiv.test", "divL.proc", "divC.proc", "loop.proc", "a.proc", "prune.proc"]
    return {corpus.load(n).name: corpus.load(n) for n in names}


@pytest.fixture(scope="session")
def corpus_suite():
    return corpus.suite()


@pytest.fixture(scope="session")
def corpus_processes():
    return corpus.processes()


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
