import math

import numpy as np
import pytest
from hypothesis import settings

from tiling_billiards import Tiling, quad_from_positions, triangle_from_angles

settings.register_profile("repo", deadline=None, max_examples=60)
settings.load_profile("repo")


def tri(*degrees):
    return triangle_from_angles(*(math.radians(x) for x in degrees))


def quad(*degrees):
    return quad_from_positions([math.radians(x) for x in degrees])


SHAPES = {
    "equilateral": tri(60, 60, 60),
    "acute": tri(70, 60, 50),
    "obtuse": tri(100, 50, 30),
    "square": quad(135, 45, -45, -135),
    "kite": quad(100, 10, -100, -170),
    "quad_outside": quad(170, 120, 60, 10),
}


@pytest.fixture(params=sorted(SHAPES))
def any_tiling(request):
    return Tiling(SHAPES[request.param])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance criterion number -> (passed, one-line summary)
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {line}")
