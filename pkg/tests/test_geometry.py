"""
Test the perforated-domain geometry and region quadrature.

Validates:
1. Interior cell counts and lattice placement
2. Hole membership at the eps^3 scale
3. Cell region volumes add up to the cell
4. Shape and parameter validation
5. Adaptive shell quadrature against closed forms
"""

import numpy as np
import pytest

from brinkhom.core.exceptions import CellIndexError, InvalidParameterError, InvalidShapeError
from brinkhom.services.geometry import (
    Box,
    BoxMinusBall,
    HoleShape,
    OuterDomain,
    RegionKind,
    Shell,
    build_perforated_domain,
    cell_regions,
    region_quadrature,
)


def test_interior_cell_counts(unit_box):
    """Cells of side 2 eps fully inside [-1, 1]^3 on the lattice 2 eps Z^3."""
    assert build_perforated_domain(unit_box, 0.5).n_holes == 1
    assert build_perforated_domain(unit_box, 0.2).n_holes == 5**3
    assert build_perforated_domain(unit_box, 0.1).n_holes == 9**3


def test_no_interior_cell_in_small_ball(unit_ball_domain):
    """A cube of half-width 0.9 does not fit in the unit ball."""
    pd = build_perforated_domain(unit_ball_domain, 0.9)
    assert pd.n_holes == 0
    assert pd.hole_volume == 0.0
    assert pd.perforated_volume == pytest.approx(4.0 / 3.0 * np.pi)


def test_hole_membership(single_hole):
    """Points inside eps^3 of the centre are solid, points just outside are fluid."""
    r = single_hole.hole_radius  # 0.125
    points = np.array([[0.0, 0.0, 0.0], [0.9 * r, 0.0, 0.0], [1.1 * r, 0.0, 0.0], [0.0, 0.6, 0.0]])
    assert single_hole.hole_mask(points).tolist() == [True, True, False, False]
    assert single_hole.fluid_mask(points).tolist() == [False, False, True, True]


def test_locate_returns_cell_and_offset(unit_box):
    """Each point maps to its interior cell and the offset from the cell centre."""
    pd = build_perforated_domain(unit_box, 0.2)
    cell, offset = pd.locate([[0.41, -0.02, 0.79]])
    assert cell[0] >= 0
    np.testing.assert_allclose(pd.centers[cell[0]] + offset[0], [0.41, -0.02, 0.79])
    np.testing.assert_allclose(pd.centers[cell[0]], [0.4, 0.0, 0.8])


def test_region_volumes_fill_the_cell(single_hole):
    """hole + inner + annulus + corner = (2 eps)^3."""
    regions = cell_regions(single_hole, 0)
    volumes = regions.volumes()
    assert sum(volumes.values()) == pytest.approx(single_hole.cell_volume)
    assert volumes[RegionKind.HOLE] == pytest.approx(4.0 / 3.0 * np.pi * 0.5**9)


def test_classify_regions(single_hole):
    """Labels follow |x - x_i| against eps^3, eps/2 and eps."""
    regions = cell_regions(single_hole, 0)
    points = np.array([[0.0, 0.0, 0.0], [0.2, 0.0, 0.0], [0.4, 0.0, 0.0], [0.45, 0.45, 0.0]])
    assert regions.classify(points).tolist() == ["hole", "inner", "annulus", "corner"]


def test_cell_index_out_of_range(single_hole):
    """Cell indices are checked against the interior cell count."""
    with pytest.raises(CellIndexError):
        cell_regions(single_hole, 1)


def test_epsilon_must_lie_in_unit_interval(unit_box):
    with pytest.raises(InvalidParameterError):
        build_perforated_domain(unit_box, 1.0)
    with pytest.raises(InvalidParameterError):
        build_perforated_domain(unit_box, 0.0)


def test_shape_must_fit_in_unit_ball():
    """Obstacles reaching beyond radius 1 are rejected."""
    with pytest.raises(InvalidShapeError):
        HoleShape.scaled_ball(1.5)
    with pytest.raises(InvalidShapeError):
        HoleShape.superellipsoid(0.9, 0.9, 0.9, exponent=8.0)  # corner at |x| ~ 1.4
    with pytest.raises(InvalidShapeError):
        HoleShape.from_params("torus")


def test_superellipsoid_volume_and_radii():
    """Exponent 2 reduces to the ellipsoid 4/3 pi abc."""
    shape = HoleShape.superellipsoid(0.8, 0.6, 0.5, exponent=2.0)
    assert shape.volume == pytest.approx(4.0 / 3.0 * np.pi * 0.8 * 0.6 * 0.5, rel=1e-12)
    assert shape.inscribed_radius == 0.5
    assert shape.bounding_radius == pytest.approx(0.8, rel=1e-6)


def test_ball_volume_quadrature():
    """Integral of 1 over the unit ball."""
    value = region_quadrature(Shell(np.zeros(3), 0.0, 1.0), lambda x: np.ones(x.shape[0]))
    assert value == pytest.approx(4.0 / 3.0 * np.pi, rel=1e-10)


def test_shell_quadrature_of_radial_power():
    """int_{1<r<2} r^-4 dx = 4 pi (1 - 1/2)."""
    value = region_quadrature(
        Shell(np.zeros(3), 1.0, 2.0),
        lambda x: np.linalg.norm(x, axis=1) ** -4,
    )
    assert value == pytest.approx(2.0 * np.pi, rel=1e-9)


def test_vector_integrand_and_offset_center():
    """Vector-valued integrands integrate component by component around any centre."""
    center = np.array([0.3, -0.2, 0.1])
    value = region_quadrature(
        Shell(center, 0.0, 0.5),
        lambda x: np.column_stack(
            (np.ones(x.shape[0]), x[:, 0] - center[0], (x[:, 2] - center[2]) ** 2)
        ),
    )
    volume = 4.0 / 3.0 * np.pi * 0.5**3
    np.testing.assert_allclose(value, [volume, 0.0, volume * 0.25 / 5.0], atol=1e-12)


def test_box_minus_ball():
    """Cube minus inscribed ball: 8 h^3 - 4/3 pi h^3."""
    h = 0.5
    box = region_quadrature(Box(np.zeros(3), h), lambda x: np.ones(x.shape[0]))
    corner = region_quadrature(BoxMinusBall(np.zeros(3), h, h), lambda x: np.ones(x.shape[0]))
    assert box == pytest.approx(8.0 * h**3, rel=1e-10)
    assert corner == pytest.approx(8.0 * h**3 - 4.0 / 3.0 * np.pi * h**3, rel=1e-8)


def test_outer_domain_ball_contains(unit_ball_domain):
    """Open ball membership and its bounding box."""
    assert unit_ball_domain.contains([[0.0, 0.0, 0.99], [0.0, 0.8, 0.8]]).tolist() == [True, False]
    lower, upper = unit_ball_domain.bounding_box()
    np.testing.assert_allclose(lower, -1.0)
    np.testing.assert_allclose(upper, 1.0)
    assert OuterDomain.box((0, 0, 0), (1, 2, 3)).volume() == 6.0
