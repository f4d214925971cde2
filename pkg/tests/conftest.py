import sys
import os
from pathlib import Path

# Add project root to Python path
project_root = str(Path(__file__).parent.parent)
sys.path.insert(0, project_root)

import pytest

# Set testing environment BEFORE importing project code
os.environ["CDQSIM_CONFIG"] = "testing"

from cdqsim.models import build_single_spin, build_zz_chain  # noqa: E402
from cdqsim.run_store import RunStore  # noqa: E402

GOLDEN_DIR = Path(__file__).parent / "golden"
CONFIG_DIR = Path(project_root) / "configs"


@pytest.fixture
def single_spin():
    """H_i = -X, H_f = Z, T = 1, dt = 0.2."""
    return build_single_spin(h_x=-1.0, h_z=1.0, T=1.0, dt=0.2)


@pytest.fixture
def bell_problem():
    """Two-spin ferromagnetic ZZ chain, three steps of 0.01."""
    return build_zz_chain(2, h_x=-1.0, j0=-1.0, T=0.03, dt=0.01, boundary="open")


@pytest.fixture
def ghz3_problem():
    return build_zz_chain(3, h_x=-1.0, j0=-1.0, T=0.006, dt=0.001, boundary="periodic")


@pytest.fixture
def run_store():
    """In-memory run store with its table created."""
    store = RunStore("sqlite:///:memory:")
    assert ":memory:" in store.url, "Tests must use an in-memory run store"
    store.create_tables()
    yield store
    store.engine.dispose()


@pytest.fixture
def config_dir():
    return CONFIG_DIR


@pytest.fixture
def golden_dir():
    return GOLDEN_DIR
