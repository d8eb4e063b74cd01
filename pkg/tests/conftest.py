from pathlib import Path

import pytest

from garz_kit.models.grid import Grid
from garz_kit.models.state import InitialData, Piece, PiecewiseProfile
from garz_kit.models.velocity import greenshields

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def _piece(spec):
    if len(spec) == 3:
        return Piece.constant(*spec)
    return Piece.linear(*spec)


@pytest.fixture
def make_profile():
    """(xl, xr, v) または (xl, xr, a, b) から区分関数を作る"""
    def build(*specs):
        return PiecewiseProfile.of(_piece(s) for s in specs)
    return build


@pytest.fixture
def model():
    return greenshields()


@pytest.fixture
def constant_data(make_profile):
    return InitialData(make_profile((-2.0, 2.0, 0.4)), make_profile(), 0.0, 1.0)


@pytest.fixture
def constant_grid():
    return Grid(-2.0, 2.0, 100)


@pytest.fixture
def shock_data(make_profile):
    return InitialData(make_profile((-3.0, 0.0, 0.2), (0.0, 3.0, 0.6)), make_profile(), 0.0, 1.0)


@pytest.fixture
def stationary_shock_data(make_profile):
    return InitialData(make_profile((-3.0, 0.0, 0.2), (0.0, 3.0, 0.8)), make_profile(), 0.0, 1.0)


@pytest.fixture
def riemann_grid():
    return Grid(-3.0, 3.0, 120)


@pytest.fixture
def smoke_data(make_profile):
    return InitialData(
        make_profile((-1.0, 1.0, 0.6)),
        make_profile((-1.0, 0.0, 0.5), (0.0, 1.0, -0.5)),
        0.2,
        1.0,
    )


@pytest.fixture
def smoke_grid():
    return Grid(-4.0, 4.0, 160)


@pytest.fixture
def config_dir():
    return CONFIG_DIR
