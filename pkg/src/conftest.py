from pathlib import Path

import pytest

from src.hypergraph_module import Hypergraph, read_hypergraph

INPUT_PATH = Path(__file__).resolve().parent.parent / "input"


@pytest.fixture
def two_solutions() -> Hypergraph:
    """Six vertices, three edges, d_T = 2"""
    return read_hypergraph(INPUT_PATH / "two_solutions.json")


@pytest.fixture
def duplicate_edge() -> Hypergraph:
    """{1,2,3,4} twice on five vertices, d_T = 0"""
    return read_hypergraph(INPUT_PATH / "duplicate_edge.json")


@pytest.fixture
def single_edge() -> Hypergraph:
    return read_hypergraph(INPUT_PATH / "single_edge.json")


@pytest.fixture
def input_path() -> Path:
    return INPUT_PATH
