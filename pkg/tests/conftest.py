import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from phdisk import make_grid


@pytest.fixture(scope="session")
def grid256():
    return make_grid(256, 256)


@pytest.fixture(scope="session")
def grid128():
    return make_grid(256, 128)
