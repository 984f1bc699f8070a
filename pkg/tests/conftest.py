"""Shared fixtures and the --long switch."""

from fractions import Fraction
from pathlib import Path
import json

import numpy as np
import pytest

from src.market import ProductDistribution

def pytest_addoption(parser):
    parser.addoption("--long", action="store_true", default=False, help="run slow exhaustive checks")

def pytest_collection_modifyitems(config, items):
    if config.getoption("--long"):
        return
    skip_long = pytest.mark.skip(reason="needs --long")
    for item in items:
        if "long" in item.keywords:
            item.add_marker(skip_long)

@pytest.fixture
def rng():
    return np.random.default_rng(20170611)

@pytest.fixture
def coin12():
    """Two i.i.d. items uniform on {1, 2}."""
    return ProductDistribution.iid(2, [(1, Fraction(1, 2)), (2, Fraction(1, 2))])

@pytest.fixture
def write_json(tmp_path: Path):
    def write(name, data):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path
    return write
