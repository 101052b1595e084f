"""
Shared fixtures for the test suite.
"""

import json
import sys
from pathlib import Path

import pytest

# Add project root to path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

from core.census import boundary_of_4_simplex, double_of_tetrahedron, lens_space
from core.config import PipelineConfig


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long geometric runs (Seifert-Weber and friends)")


@pytest.fixture
def double():
    return double_of_tetrahedron()


@pytest.fixture
def s4():
    return boundary_of_4_simplex()


@pytest.fixture
def lens31():
    return lens_space(3, 1)


@pytest.fixture
def small_config():
    """Single-threaded config with budgets small enough for unit tests."""
    return PipelineConfig(restarts=2, node_cap=5000, move_cap=2, quotient_budget=100,
                          word_budget=20000, threads=1)


@pytest.fixture
def write_doc(tmp_path):
    """Write a document as JSON under tmp_path and return its path."""
    def _write(name, document):
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return str(path)
    return _write
