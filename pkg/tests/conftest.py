from __future__ import annotations

import pytest

from strata.datafiles import data_path
from strata.kb.loader import load_kb
from strata.sim.grid import Grid
from strata.tactical.leaves import LeafContext

from tests.helpers import OPEN_5X5


@pytest.fixture(scope="session")
def kb():
    return load_kb(
        data_path("ontology.kb"), data_path("lexicon.kb"), data_path("profiles.kb")
    )


@pytest.fixture
def open_grid() -> Grid:
    return Grid.from_text(OPEN_5X5)


@pytest.fixture
def stub_ctx(open_grid) -> LeafContext:
    return LeafContext.for_robot("test-bot", "UGV", raw_grid=open_grid)
