"""
Test the oscillating corrector family, its norms and the resistance matrix.

Validates:
1. Corrector fields: no-slip in holes, e_k away from the balls, continuity across interfaces
2. Scaling exponents of the corrector estimates
3. Resistance matrix of the unit ball converges to (3 pi / 4) I
4. Weak-convergence functionals vanish as eps -> 0
5. Degenerate and invalid inputs
"""

import numpy as np
import pytest

from brinkhom.core.exceptions import InvalidParameterError, InvalidSweepError
from brinkhom.services.correctors import (
    SphereCellProfile,
    UniformCellProfile,
    assemble_correctors,
    cell_dissipation,
    compute_resistance,
    corrector_norms,
    expected_exponent,
    resolve_profile,
    verify_estimates,
    weak_convergence_functionals,
)
from brinkhom.services.geometry import HoleShape, build_perforated_domain
from brinkhom.services.harness import divergence_free_family, octant_bumps
from tests.conftest import BALL_RESISTANCE, SIX_PI


@pytest.fixture
def ball_family(unit_box):
    return assemble_correctors(build_perforated_domain(unit_box, 0.2))


def test_corrector_vanishes_in_holes_and_is_uniform_between_balls(ball_family):
    """w_k = 0 inside T_eps, w_k = e_k outside B_eps(x_i)."""
    eps = ball_family.epsilon
    center = ball_family.domain.centers[0]
    points = np.array(
        [
            center,
            center + [0.5 * eps**3, 0.0, 0.0],
            center + [0.95 * eps, 0.95 * eps, 0.0],  # corner of the cell
        ]
    )
    for k in range(3):
        w, q = ball_family.evaluate(points, k)
        np.testing.assert_allclose(w[:2], 0.0)
        np.testing.assert_allclose(w[2], np.eye(3)[k])
        assert q[2] == 0.0


def test_interfaces_are_continuous(ball_family):
    """Velocity matches across the hole boundary, |x - x_i| = eps/2 and |x - x_i| = eps."""
    assert ball_family.trace_mismatch < 1e-10
    for k in range(3):
        jumps = ball_family.interface_mismatch(k)
        assert jumps["hole"] < 1e-10
        assert jumps["inner"] < 1e-10
        assert jumps["outer"] < 1e-10


def test_sphere_pressure_needs_no_gauge_shift(ball_family):
    """Odd pressure profiles already have zero mean over every cell."""
    np.testing.assert_array_equal(ball_family.pressure_shift, 0.0)


def test_annulus_flow_is_solenoidal(ball_family):
    for annulus in ball_family.annuli:
        assert annulus.max_divergence() < 1e-10


def test_expected_exponents():
    """3 (2/p - 1) for gradient and pressure, 6 (1/p - 1) near the holes, 1 far away."""
    assert expected_exponent("grad_w", 2.0) == 0.0
    assert expected_exponent("pressure", 3.0) == pytest.approx(-1.0)
    assert expected_exponent("grad_q_inner", 2.0) == pytest.approx(-3.0)
    assert expected_exponent("far_grad_w", 4.0) == 1.0
    with pytest.raises(InvalidParameterError):
        expected_exponent("vorticity", 2.0)


def test_norms_reject_small_powers(ball_family):
    with pytest.raises(InvalidParameterError):
        corrector_norms(ball_family, p=1.5)


def test_gradient_norm_stays_bounded_for_p_two(ball_family):
    """||grad w_k||_{L^2(D)}^2 is about the covered volume times 3 pi / 4."""
    norms = corrector_norms(ball_family, p=2.0)
    covered = ball_family.domain.covered_volume
    assert norms.grad_w**2 == pytest.approx(BALL_RESISTANCE * covered, rel=0.2)
    assert norms.split["pressure_rest"] == 0.0


def test_estimate_rates_match_exponents(unit_box):
    """Fitted slopes over eps = 0.2, 0.1, 0.05 satisfy every one-sided estimate."""
    report = verify_estimates([0.2, 0.1, 0.05], p_list=(2.0, 3.0))
    assert not report.degenerate
    assert report.all_passed, report.rate_rows()
    slopes = {(c.quantity, c.p): c.slope for c in report.checks}
    assert slopes[("grad_q_inner", 2.0)] == pytest.approx(-3.0, abs=0.3)
    assert slopes[("far_grad_w", 2.0)] >= 0.7
    assert len(report.norm_rows()) == 3 * 2 * 5


def test_rate_verification_needs_three_eps():
    with pytest.raises(InvalidSweepError):
        verify_estimates([0.2, 0.1])


def test_uniform_profile_is_degenerate(unit_box):
    """Without holes the correctors are e_k and every norm vanishes."""
    report = verify_estimates([0.2, 0.1, 0.05], p_list=(2.0,), source=UniformCellProfile())
    assert report.degenerate
    assert all(c.slope is None for c in report.checks)


def test_cell_dissipation_is_drag_per_cell(ball_family):
    """Per-cell energy ~ eps^3 * 6 pi I, symmetric."""
    matrix = cell_dissipation(ball_family)
    eps = ball_family.epsilon
    np.testing.assert_allclose(matrix, matrix.T, atol=1e-14)
    np.testing.assert_allclose(np.diag(matrix), SIX_PI * eps**3, rtol=0.2)


def test_resistance_of_unit_ball(unit_box):
    """Extrapolated M within 10% of (3 pi / 4) I, symmetric PSD at every eps."""
    estimate = compute_resistance([0.2, 0.1, 0.05])
    np.testing.assert_allclose(np.diag(estimate.limit), BALL_RESISTANCE, rtol=0.1)
    assert np.max(np.abs(estimate.limit - np.diag(np.diag(estimate.limit)))) < 1e-6
    assert all(estimate.symmetric) and all(estimate.positive_semidefinite)
    assert estimate.converged
    assert len(estimate.rows()) == 3 * 2 * 9 + 9


def test_resistance_of_scaled_ball_scales_with_radius():
    """M is linear in the obstacle radius for balls."""
    half = compute_resistance([0.2, 0.1], shape=HoleShape.scaled_ball(0.5))
    np.testing.assert_allclose(np.diag(half.limit), 0.5 * BALL_RESISTANCE, rtol=0.1)


def test_resistance_without_interior_cells(unit_ball_domain):
    with pytest.raises(InvalidSweepError):
        compute_resistance([0.9], outer=unit_ball_domain)


def test_weak_functionals_vanish_with_eps(unit_box):
    """||w_k - e_k||_{L^2} decays like eps^2 and bounds every tested functional."""
    fields = divergence_free_family(unit_box)
    scalars = octant_bumps(unit_box)
    coarse = weak_convergence_functionals(
        assemble_correctors(build_perforated_domain(unit_box, 0.2)), fields, scalars
    )
    fine = weak_convergence_functionals(
        assemble_correctors(build_perforated_domain(unit_box, 0.1)), fields, scalars
    )
    assert coarse.velocity.shape == (3, len(fields))
    assert coarse.pressure.shape == (3, len(scalars))
    assert np.all(fine.lp_norms[2.0] < 0.5 * coarse.lp_norms[2.0])
    for result in (coarse, fine):
        bound = np.outer(result.lp_norms[2.0], [f.l2_norm() for f in fields])
        assert np.all(np.abs(result.velocity) <= 1.05 * bound + 1e-12)


def test_weak_functionals_without_holes(unit_ball_domain):
    """No interior cell: every functional is exactly zero."""
    cf = assemble_correctors(build_perforated_domain(unit_ball_domain, 0.9))
    result = weak_convergence_functionals(cf, divergence_free_family(unit_ball_domain))
    assert result.n_holes == 0
    np.testing.assert_array_equal(result.velocity, 0.0)


def test_profile_resolution():
    """Balls get the closed form; other shapes need a solved cell problem."""
    assert isinstance(resolve_profile(HoleShape.unit_ball()), SphereCellProfile)
    with pytest.raises(InvalidParameterError):
        resolve_profile(HoleShape.superellipsoid(0.8, 0.6, 0.5))
