import json
from pathlib import Path

import numpy as np
import pytest

from tetherkit.environment import load_scenario
from tetherkit.geometry import Polygon, Polyline

REPO = Path(__file__).resolve().parents[1]
CORPUS = REPO / "scenarios"


@pytest.fixture(scope="session")
def corpus_dir():
    return CORPUS


@pytest.fixture(scope="session")
def corpus():
    return {f.stem: load_scenario(f.read_bytes()) for f in sorted(CORPUS.glob("*.json"))}


def square(x0, y0, x1, y1):
    return Polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)])


@pytest.fixture()
def unit_square():
    return square(0.0, 0.0, 1.0, 1.0)
