import os

import pytest

import misstab as mt

DATA = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture(scope="session")
def table5():
    """One missing-capable variable (2 x 2 x 2 plus one margin)."""
    return mt.load_table(os.path.join(DATA, "table5.json"))


@pytest.fixture(scope="session")
def table8():
    """Two missing-capable variables sharing an always-observed third."""
    return mt.load_table(os.path.join(DATA, "table8.json"))


@pytest.fixture(scope="session")
def table4():
    """All three variables missing-capable."""
    return mt.load_table(os.path.join(DATA, "table4.json"))
