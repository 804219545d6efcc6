import os
import sys

import pytest

# Add the repository root to the path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from services.cond_dist.model import build_table_model  # noqa: E402


@pytest.fixture(scope="session")
def model_k3_n27():
    """k = 3, n = 27: lambda_ij = 3, nu = 27, B = 9."""
    return build_table_model(3, 27)


@pytest.fixture(scope="session")
def model_k3_n9():
    """k = 3, n = 9: lambda_ij = 1, B = 3."""
    return build_table_model(3, 9)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long chains and large-n checks; deselect with -m 'not slow'")
