import pytest
import yaml
from pathlib import Path

from src.plumbing import lattice, parse, spinc_classes

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: exhaustive acceptance sweeps (deselect with -m \"not slow\")")


def load_graph(name):
    return parse((FIXTURES / f"{name}.plumb").read_text(encoding="utf-8"))


@pytest.fixture
def graphs():
    """
    All valid shipped fixtures, parsed.
    """
    names = ["trefoil", "double-cover", "unknot", "rp3", "chain22", "torus25", "torus34"]
    return {name: load_graph(name) for name in names}


@pytest.fixture
def trefoil():
    g = load_graph("trefoil")
    return g, lattice(g)


@pytest.fixture
def rp3():
    g = load_graph("rp3")
    return g, lattice(g)


@pytest.fixture
def unknot():
    g = load_graph("unknot")
    return g, lattice(g)


@pytest.fixture
def chain22():
    g = load_graph("chain22")
    return g, lattice(g)


@pytest.fixture
def double_cover():
    g = load_graph("double-cover")
    return g, lattice(g)


@pytest.fixture
def trefoil_class(trefoil):
    """
    The single Spin^c class of the trefoil.
    Canonical representative in (a, b, c) order is (-1, -2, 1).
    """
    _, lat = trefoil
    return spinc_classes(lat)[0]


@pytest.fixture
def mock_config(tmp_path):
    """
    Returns a valid configuration dict with small truncation settings
    and logs under tmp_path.
    """
    return {
        "app": {
            "name": "TestPlumbCalc",
            "log_level": "DEBUG",
            "log_dir": str(tmp_path / "logs"),
        },
        "engine": {
            "max_vertices": 64,
            "max_cells": 200000,
            "max_subset": 20,
            "envelope_pieces": 4,
            "zemke_window": 2,
            "level_cutoff_offset": 2,
            "default_window": 1,
            "default_qmax": 10,
            "verify_box": 1,
            "relations_vectors": 10,
            "relations_window": 1,
            "workers": 2,
        },
        "output": {
            "format": "json",
            "csv_digits": 12,
            "t_grid": 2,
            "png_size": [320, 240],
        },
    }


@pytest.fixture
def config_file(tmp_path, mock_config):
    """
    Writes mock_config to a YAML file and returns its path.
    """
    path = tmp_path / "settings.yaml"
    path.write_text(yaml.safe_dump(mock_config), encoding="utf-8")
    return path
