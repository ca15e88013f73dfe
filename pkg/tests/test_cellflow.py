"""
Test the exterior cell problem and its closed-form sphere fields.

Validates:
1. Sphere field: no-slip, solenoidal, Stokes drag 6 pi a
2. Truncated drag decreases to 6 pi and matches the container correction
3. Shell solutions reproduce any field of the modal family
4. Numerical cell problem: symmetric PSD drag, resolution errors
5. Drag oracle at R = 15 and at production scale R = 30 (slow)
"""

import numpy as np
import pytest

from brinkhom.core.exceptions import DomainError, InvalidParameterError, ResolutionError
from brinkhom.services.cellflow import (
    ModalField,
    analytic_sphere_solution,
    container_wall_factor,
    dissipation,
    drag_matrix,
    project_trace,
    shell_solution,
    solve_cell_problem,
    truncated_sphere_drag,
    truncated_sphere_field,
    wall_factor,
)
from brinkhom.utils.helpers import fibonacci_sphere, unit_vector
from tests.conftest import SIX_PI


def test_sphere_field_is_no_slip_on_the_ball():
    """w = 0 on |x| = a for every direction and radius."""
    n = fibonacci_sphere(200)
    for radius in (1.0, 0.4):
        for k in range(3):
            w = ModalField.sphere(unit_vector(k), radius).velocity(radius * n)
            np.testing.assert_allclose(w, 0.0, atol=1e-13)


def test_sphere_field_is_solenoidal(rng):
    """Trace of the analytic gradient vanishes away from the ball."""
    points = rng.normal(size=(500, 3))
    points *= (1.0 + 5.0 * rng.random(500))[:, None] / np.linalg.norm(points, axis=1)[:, None]
    div = ModalField.sphere(unit_vector(1)).divergence(points)
    np.testing.assert_allclose(div, 0.0, atol=1e-12)


def test_sphere_drag_and_pressure_sign():
    """Stokeslet force -6 pi a e_k on the fluid, pressure -(3/2)(e_k.x)/r^3."""
    field = ModalField.sphere(unit_vector(0), radius=1.0)
    np.testing.assert_allclose(field.net_force(), [-SIX_PI, 0.0, 0.0])
    w, q = analytic_sphere_solution([2.0, 0.0, 0.0], 0)
    assert q == pytest.approx(-0.375)
    assert w[0] == pytest.approx(1.0 - 0.75 * 2.0 / 2.0 + 0.25 * 2.0 / 8.0)


def test_sphere_solution_domain():
    """The closed form is only defined outside the ball."""
    with pytest.raises(DomainError):
        analytic_sphere_solution([0.5, 0.0, 0.0], 0)


def test_truncated_drag_decreases_to_stokes():
    """Wall confinement increases the drag; it tends to 6 pi as R grows."""
    drags = [truncated_sphere_drag(R) for R in (5.0, 10.0, 30.0, 1000.0)]
    assert all(a > b for a, b in zip(drags[:-1], drags[1:], strict=False))
    assert drags[-1] == pytest.approx(SIX_PI, rel=3e-3)
    assert drags[0] > SIX_PI


def test_wall_factor_matches_container_formula():
    """Exact truncated drag against the closed-form concentric-sphere correction."""
    for lam in (0.02, 0.1, 0.3, 0.5):
        assert wall_factor(lam) == pytest.approx(container_wall_factor(lam), rel=1e-9)
    assert wall_factor(0.0) == 1.0
    with pytest.raises(InvalidParameterError):
        wall_factor(1.0)


def test_dissipation_equals_drag():
    """int |grad w|^2 over the truncated shell equals the drag on the ball."""
    R = 8.0
    field = truncated_sphere_field(R)
    assert dissipation(field, 1.0, R) == pytest.approx(truncated_sphere_drag(R), rel=1e-8)


def test_shell_solution_reproduces_sphere_flow():
    """Traces of the sphere flow on r = 1 and r = 5 give back the same field."""
    n = fibonacci_sphere(300)
    sphere = ModalField.sphere(unit_vector(2))
    trace = project_trace(n, sphere.velocity(5.0 * n))
    assert trace.residual < 1e-12
    rebuilt = shell_solution(1.0, 5.0, (np.zeros(3), np.zeros(3)), (trace.uniform, trace.radial))
    np.testing.assert_allclose(rebuilt.coefficients, sphere.coefficients, atol=1e-10)


def test_modal_coefficients_shape_is_checked():
    with pytest.raises(InvalidParameterError):
        ModalField(np.zeros((3, 3)))


def test_coarse_cell_problem_drag_is_symmetric_psd():
    """h = a/2 at R = 10: symmetric positive drag close to the confined oracle."""
    cs = solve_cell_problem(R=10.0, h=0.5)
    drag = drag_matrix(cs)
    np.testing.assert_allclose(drag, drag.T, rtol=1e-8, atol=1e-10)
    assert np.all(np.linalg.eigvalsh(drag) > 0)
    # Mirror-symmetric grid: no cross-coupling between directions
    assert np.max(np.abs(drag - np.diag(np.diag(drag)))) < 0.02 * np.max(np.diag(drag))
    # Staircase obstacle at 4 cells per diameter is only roughly a ball
    np.testing.assert_allclose(np.diag(drag), truncated_sphere_drag(10.0), rtol=0.4)
    assert cs.max_divergence() < 1e-6


def test_cell_problem_resolution_error():
    """Fewer than 4 cells across the obstacle is a resolution failure."""
    with pytest.raises(ResolutionError) as excinfo:
        solve_cell_problem(R=10.0, h=1.0)
    assert excinfo.value.exit_code == 2
    assert excinfo.value.minimal_cells > 0


def test_cell_problem_parameter_checks():
    with pytest.raises(InvalidParameterError):
        solve_cell_problem(R=5.0)
    with pytest.raises(InvalidParameterError):
        solve_cell_problem(R=10.0, h=-0.1)


@pytest.mark.slow
def test_cell_problem_drag_oracle():
    """Unit ball: corrected drag within a few percent of 6 pi I, field close to the closed form."""
    cs = solve_cell_problem(R=15.0, h=0.125)
    corrected = cs.corrected_drag()
    np.testing.assert_allclose(np.diag(corrected), SIX_PI, rtol=0.05)
    assert np.max(np.abs(corrected - np.diag(np.diag(corrected)))) <= 0.02 * SIX_PI
    assert cs.field_error(0) < 0.05


@pytest.mark.slow
def test_cell_problem_drag_at_production_scale():
    """R = 30, default h: every diagonal entry within 2% of 6 pi, off-diagonals within 2%."""
    cs = solve_cell_problem(R=30.0)
    corrected = cs.corrected_drag()
    diagonal = np.diag(corrected)
    np.testing.assert_allclose(diagonal, SIX_PI, rtol=0.02)
    for i in range(3):
        for k in range(3):
            if i != k:
                assert abs(corrected[i, k]) <= 0.02 * diagonal[i]
