from __future__ import annotations

from importlib import resources

import pytest

from querydeck.logs import parse_entries, read_entries
from querydeck.parser import default_grammar, parse
from querydeck.widgets import default_library


@pytest.fixture(scope="session")
def ann():
    return default_grammar()


@pytest.fixture(scope="session")
def lib():
    return default_library()


def load_bundled_log(name: str):
    text = resources.files("querydeck.data").joinpath(f"logs/{name}.sql").read_text()
    return parse_entries(read_entries(text))


@pytest.fixture(scope="session")
def worked_pair(ann):
    """The two projection/predicate example queries used throughout."""
    q1 = parse("SELECT day, sales FROM sf WHERE cty = 'USA'", ann)
    q2 = parse("SELECT day, costs FROM sf WHERE cty = 'EUR'", ann)
    return q1, q2
