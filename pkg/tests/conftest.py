import numpy as np
import pytest
from hypothesis import settings

from gyrostat import fields as F
from gyrostat.core import Cavity, build_system

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def random_field(cavity, seed, walls=True):
    """Face field with i.i.d. normal entries (wall-normal faces zeroed)."""
    rng = np.random.default_rng(seed)
    nx, ny, nz = cavity.grid
    V = F.FaceField(
        rng.normal(size=(nx + 1, ny, nz)),
        rng.normal(size=(nx, ny + 1, nz)),
        rng.normal(size=(nx, ny, nz + 1)),
        cavity,
    )
    return V.with_walls() if walls else V


@pytest.fixture(scope="session")
def cube8():
    return Cavity((1.0, 1.0, 1.0), (8, 8, 8))


@pytest.fixture(scope="session")
def box10():
    # unequal spacings catch axis mix-ups
    return Cavity((1.0, 1.2, 0.8), (8, 10, 12))


@pytest.fixture(scope="session")
def setup_stable8():
    return build_system((1.4, 1.4, 1.4), (8, 8, 8), 0.02, (1.0, 2.0, 3.0), (0.0, 0.0, 1.0))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "REPORT", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
