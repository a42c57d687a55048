import sys
from importlib import resources

import pytest

from nsa.minilang import parse_source
from nsa.pipeline import SplitSpec, from_sources, split, synth_sources


@pytest.fixture(scope="session")
def board_source() -> str:
    return resources.files("nsa").joinpath("samples/board.mini").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def board_module(board_source):
    return parse_source(board_source)


@pytest.fixture(scope="session")
def corpus7():
    """Parsed files of the seed-7, 500-function synthetic corpus."""
    return from_sources(synth_sources(7, 500))


@pytest.fixture(scope="session")
def corpus7_split(corpus7):
    parts = split([f.path for f in corpus7], SplitSpec(0.8, 0.1, 0.1, 0))
    train = set(parts["train"])
    return [f for f in corpus7 if f.path in train], [f for f in corpus7 if f.path not in train]


@pytest.fixture(scope="session")
def small_corpus():
    return from_sources(synth_sources(11, 40))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
