from pathlib import Path

import numpy as np
import pytest

from tbp.fixtures import write_universe
from tbp.market_data import load_panel, split_panel

DATA = Path(__file__).parent / "data"

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("universe")
    write_universe(out, seed=7)
    return out


@pytest.fixture(scope="session")
def fixture_panel(fixture_dir):
    return load_panel(fixture_dir, "last")


@pytest.fixture(scope="session")
def fixture_split(fixture_panel):
    return split_panel(fixture_panel)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
