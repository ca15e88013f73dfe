"""
Test the convergence harness: rate fits, test fields, checks and the sweep driver.

Validates:
1. Log-log rate fits and their failure modes
2. Compactly supported test fields: integrals, norms, zero divergence
3. Solenoidality and Brinkman residual checks
4. Sweep configuration validation
5. Stage failures, degenerate sweeps and a full Stokes study (slow)
"""

import numpy as np
import pytest

from brinkhom.core.exceptions import InvalidParameterError, InvalidSweepError, RateFitError
from brinkhom.services.fdsolver import FlowMode, StaggeredGrid, solve_brinkman
from brinkhom.services.geometry import Shell, region_quadrature
from brinkhom.services.harness import (
    MAX_TEST_FIELDS,
    ConstantField,
    CurlBump,
    ScalarBump,
    SweepConfig,
    brinkman_residual,
    divergence_free_family,
    fit_rate,
    octant_bumps,
    run_convergence_study,
    solenoidality_check,
    swirl,
)
from tests.conftest import BALL_RESISTANCE


def test_fit_rate_recovers_power_law():
    """values = 3 eps^2 gives slope 2 and a perfect fit."""
    eps = [0.4, 0.2, 0.1, 0.05]
    fit = fit_rate(eps, [3.0 * e**2 for e in eps])
    assert fit.slope == pytest.approx(2.0)
    assert fit.intercept == pytest.approx(np.log(3.0))
    assert fit.r_squared == pytest.approx(1.0)
    assert fit.count == 4 and fit.excluded == 0


def test_fit_rate_drops_nonpositive_values():
    fit = fit_rate([0.4, 0.2, 0.1, 0.05], [0.4, 0.0, 0.1, 0.05])
    assert fit.excluded == 1
    assert fit.slope == pytest.approx(1.0)


def test_fit_rate_needs_three_points():
    with pytest.raises(RateFitError):
        fit_rate([0.2, 0.1], [1.0, 2.0])
    with pytest.raises(RateFitError):
        fit_rate([0.4, 0.2, 0.1], [1.0, -1.0, 2.0])
    with pytest.raises(RateFitError):
        fit_rate([0.4, 0.2, 0.1], [1.0, 2.0])


def test_scalar_bump_integral_and_norm():
    """Closed-form moments of (1 - |x - c|^2 / r^2)^4 against adaptive quadrature."""
    bump = ScalarBump(np.array([0.1, -0.2, 0.3]), 0.4)
    region = Shell(bump.center, 0.0, bump.radius)
    assert region_quadrature(region, bump.value) == pytest.approx(bump.integral(), rel=1e-8)
    assert region_quadrature(region, lambda x: bump.value(x) ** 2) == pytest.approx(
        bump.l2_norm() ** 2, rel=1e-8
    )
    assert bump.value([[1.0, 1.0, 1.0]])[0] == 0.0


def test_curl_bump_is_divergence_free(rng):
    """Trace of the analytic gradient vanishes; the field vanishes outside its ball."""
    phi = CurlBump(ScalarBump(np.zeros(3), 0.5), axis=2)
    points = 0.3 * rng.normal(size=(400, 3))
    grad = phi.gradient(points)
    np.testing.assert_allclose(np.trace(grad, axis1=1, axis2=2), 0.0, atol=1e-12)
    np.testing.assert_allclose(phi.value([[0.0, 0.0, 0.6]]), 0.0)
    squared = region_quadrature(
        Shell(np.zeros(3), 0.0, 0.5), lambda x: np.sum(phi.value(x) ** 2, axis=1)
    )
    assert squared == pytest.approx(phi.l2_norm() ** 2, rel=1e-6)


def test_curl_bump_gradient_matches_finite_differences():
    phi = CurlBump(ScalarBump(np.zeros(3), 0.8), axis=0)
    x = np.array([[0.1, 0.2, -0.15]])
    h = 1e-6
    steps = h * np.eye(3)
    numeric = np.column_stack(
        [(phi.value(x + steps[b]) - phi.value(x - steps[b]))[0] / (2 * h) for b in range(3)]
    )
    np.testing.assert_allclose(phi.gradient(x)[0], numeric, atol=1e-6)


def test_test_field_family(unit_box, unit_ball_domain):
    """Up to eight bumps, each supported inside the domain."""
    for outer in (unit_box, unit_ball_domain):
        family = divergence_free_family(outer)
        assert len(family) == MAX_TEST_FIELDS
        for phi in family:
            if outer is unit_ball_domain:
                assert np.linalg.norm(phi.bump.center) + phi.bump.radius <= 1.0
            else:
                assert np.all(np.abs(phi.bump.center) + phi.bump.radius <= 1.0)
    with pytest.raises(InvalidParameterError):
        octant_bumps(unit_box, MAX_TEST_FIELDS + 1)


def test_constant_field_norm():
    field = ConstantField(np.array([3.0, 4.0, 0.0]), volume=8.0)
    assert field.l2_norm() == pytest.approx(5.0 * np.sqrt(8.0))
    assert field.value(np.zeros((2, 3))).shape == (2, 3)


def test_swirl_is_rotational(unit_box):
    g = swirl(unit_box)
    values = g([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    np.testing.assert_allclose(values, [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0]])


def test_solenoidality_separates_cells_next_to_the_mask():
    """Divergence on cells touching the mask does not fail the check."""
    grid = StaggeredGrid.uniform(-1.0, 1.0, 6)
    solid = np.zeros(grid.shape, dtype=bool)
    solid[2:4, 2:4, 2:4] = True
    grid = grid.with_solid(solid)
    u = np.zeros(grid.n_faces_total)
    check = solenoidality_check(grid, u)
    assert check.passed
    assert check.max_divergence == 0.0
    assert check.near_mask_cells > 0


def test_brinkman_residual_of_a_solved_state(unit_box):
    """A converged Brinkman solve has a tested momentum residual at the solver tolerance."""
    grid = StaggeredGrid.uniform(-1.0, 1.0, 10)
    m = BALL_RESISTANCE * np.eye(3)
    state = solve_brinkman(unit_box, grid, m, g=swirl(unit_box), tol=1e-10)
    residual = brinkman_residual(state, divergence_free_family(unit_box), tol=1e-8)
    assert residual.passed
    # Wrong friction is detected
    wrong = brinkman_residual(
        state, divergence_free_family(unit_box), resistance=10.0 * np.eye(3), tol=1e-8
    )
    assert not wrong.passed


def test_sweep_config_validation():
    """At least two strictly decreasing eps; the perforated mode cannot be brinkman."""
    with pytest.raises(InvalidSweepError):
        SweepConfig(eps_list=[0.5])
    with pytest.raises(InvalidSweepError):
        SweepConfig(eps_list=[0.4, 0.5])
    with pytest.raises(InvalidSweepError):
        SweepConfig(eps_list=[0.5, 0.4], mode="brinkman")
    with pytest.raises(InvalidParameterError):
        SweepConfig(eps_list=[0.5, 0.4], mode="compressible", beta=12.0)


def test_limit_density():
    """rho_0 = mass / |D| in compressible mode, the constant density otherwise."""
    assert SweepConfig(eps_list=[0.5, 0.4], rho0=2.0).limit_density == 2.0
    cfg = SweepConfig(eps_list=[0.5, 0.4], mode=FlowMode.COMPRESSIBLE, mass=4.0)
    assert cfg.limit_density == pytest.approx(0.5)


def test_reference_failure_is_recorded():
    """An invalid resistance fails the reference stage; the report is partial."""
    cfg = SweepConfig(eps_list=[0.5, 0.4], resistance=-np.eye(3))
    report = run_convergence_study(cfg)
    assert report.partial
    assert not report.passed
    assert report.failures[0].stage == "reference"
    assert report.entries == []


def test_sweep_without_holes_is_degenerate(unit_ball_domain):
    """No interior cell at any eps: every entry is compared against the friction-free limit."""
    cfg = SweepConfig(
        eps_list=[0.95, 0.9],
        outer=unit_ball_domain,
        reference_cells=16,
        resistance=BALL_RESISTANCE * np.eye(3),
        max_workers=1,
    )
    report = run_convergence_study(cfg, version="test")
    assert not report.partial
    assert all(e.degenerate for e in report.entries)
    # Same staircase ball, same grid and M = 0: the perforated solve is the limit
    assert all(e.l2_gap < 1e-10 for e in report.entries)
    assert report.trends == {}
    assert not report.passed
    metrics = {r["metric"] for r in report.rows()}
    assert {"l2_gap", "degenerate", "rho0", "brinkman_residual"} <= metrics


@pytest.mark.slow
def test_stokes_study_runs_every_stage(unit_box):
    """eps = 0.5, 0.4, 0.315 towards the Brinkman limit with M = (3 pi / 4) I."""
    cfg = SweepConfig(
        eps_list=[0.5, 0.4, 0.315],
        outer=unit_box,
        resistance=BALL_RESISTANCE * np.eye(3),
        test_fields=4,
    )
    report = run_convergence_study(cfg)
    assert not report.partial
    assert [e.n_holes for e in report.entries] == [1, 1, 27]
    assert all(e.cauchy_schwarz for e in report.entries)
    assert all(e.energy.passed for e in report.entries)
    assert all(e.solenoidality.passed for e in report.entries)
    assert report.reference.residual.passed
