from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from synthlang import build_world  # noqa: E402


@pytest.fixture(scope="session")
def world():
    return build_world(seed=7)
