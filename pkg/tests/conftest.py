import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

import pytest

import fixtures

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture(scope="session")
def corpus():
    return fixtures.corpus()


@pytest.fixture()
def floattools_bytes():
    return fixtures.build_floattools()


@pytest.fixture()
def floattools_goals_text():
    with open(os.path.join(DATA_DIR, "floattools_goals.json")) as f:
        return f.read()


def data_path(name: str) -> str:
    return os.path.join(DATA_DIR, name)
