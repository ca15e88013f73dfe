import numpy as np
import pytest

from brinkhom.services.geometry import HoleShape, OuterDomain, build_perforated_domain

SIX_PI = 6.0 * np.pi
BALL_RESISTANCE = 0.75 * np.pi  # 6 pi per hole over the (2 eps)^3 cell, eps^3 holes


@pytest.fixture
def unit_box() -> OuterDomain:
    return OuterDomain.box()


@pytest.fixture
def unit_ball_domain() -> OuterDomain:
    return OuterDomain.ball()


@pytest.fixture
def unit_ball() -> HoleShape:
    return HoleShape.unit_ball()


@pytest.fixture
def single_hole(unit_box, unit_ball):
    """eps = 0.5 on [-1, 1]^3: one interior cell centred at the origin."""
    return build_perforated_domain(unit_box, 0.5, unit_ball)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def out_dir(tmp_path):
    path = tmp_path / "run"
    path.mkdir()
    return path
