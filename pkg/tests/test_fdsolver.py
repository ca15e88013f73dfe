"""
Test the staggered finite-difference solvers.

Validates:
1. Grid construction and the hole resolution check
2. Brinkman channel against its closed-form profile
3. Stokes / Brinkman solves: divergence, literal energy inequality, M = 0 reproduces Stokes
4. Zero extension keeps the L^2 norm, conservative remap keeps integrals, zero convective work
5. Compressible parameters, pressure law, step rejection, mass conservation and flattening
   of the density under a stiff pressure (slow)
6. Discrete Bogovskii operator
7. Manufactured-solution convergence order (slow)
"""

import dataclasses

import numpy as np
import pytest

from brinkhom.core.exceptions import (
    InvalidInputError,
    InvalidParameterError,
    PositivityFailureError,
    ResolutionError,
)
from brinkhom.services.fdsolver import (
    CompressibleParams,
    MacOperators,
    ManufacturedSolution,
    PseudoTimeControls,
    StaggeredGrid,
    bogovskii_sweep,
    centered_coordinate,
    channel_oracle,
    discrete_bogovskii,
    energy_check,
    flatness,
    fluid_l2_norm_squared,
    mask_holes,
    observed_order,
    perforated_grid,
    pressure_from_density,
    refinement_study,
    remap_cells,
    solve_brinkman,
    solve_compressible_steady,
    solve_stokes_perforated,
    zero_extend,
)
from brinkhom.services.fdsolver.compressible import MAX_STEP_REJECTIONS, CompressibleMarcher
from brinkhom.services.fdsolver.diagnostics import ENERGY_RTOL
from brinkhom.services.geometry import OuterDomain, build_perforated_domain
from brinkhom.services.harness import swirl
from tests.conftest import BALL_RESISTANCE


@pytest.fixture(scope="module")
def empty_ball():
    """Unit ball at eps = 0.9: no interior cell, a staircase ball on a coarse box grid."""
    return build_perforated_domain(OuterDomain.ball(), 0.9)


@pytest.fixture(scope="module")
def stokes_state(empty_ball):
    return solve_stokes_perforated(empty_ball, g=swirl(empty_ball.outer), tol=1e-10)


def test_uniform_grid_geometry():
    grid = StaggeredGrid.uniform(-1.0, 1.0, (4, 5, 6))
    assert grid.shape == (4, 5, 6)
    assert grid.volume == pytest.approx(8.0)
    assert grid.n_faces(0) == 5 * 5 * 6
    with pytest.raises(InvalidParameterError):
        StaggeredGrid.uniform(-1.0, 1.0, 0)


def test_hole_graded_grid_resolves_holes(single_hole):
    """At least four cells across every hole; the hole cells are solid."""
    grid = perforated_grid(single_hole)
    assert grid.cells_across(single_hole.centers[0], single_hole.hole_radius) >= 4
    assert grid.solid.any()
    assert grid.min_spacing < single_hole.hole_radius


def test_coarse_grid_is_a_resolution_error(single_hole):
    """A uniform 8^3 grid cannot see a hole of radius 1/8."""
    with pytest.raises(ResolutionError) as excinfo:
        mask_holes(StaggeredGrid.uniform(-1.0, 1.0, 8), single_hole)
    assert excinfo.value.minimal_cells >= 32
    with pytest.raises(InvalidParameterError):
        perforated_grid(single_hole, cells_per_diameter=3)


def test_brinkman_channel_oracle():
    """-u'' + m u = 1 with no-slip walls: second-order agreement with the cosh profile."""
    coarse = channel_oracle(m=4.0, mu=1.0, f1=1.0, ny=32)
    fine = channel_oracle(m=4.0, mu=1.0, f1=1.0, ny=64)
    assert fine.max_gap < 1e-3
    assert fine.max_gap < 0.35 * coarse.max_gap
    with pytest.raises(InvalidParameterError):
        channel_oracle(m=0.0, mu=1.0, f1=1.0, ny=32)


def test_stokes_solve_is_solenoidal_and_dissipative(stokes_state):
    """Discrete divergence vanishes; dissipation does not exceed the work of the forces."""
    assert stokes_state.max_divergence() < 1e-8
    check = energy_check(stokes_state)
    assert check.passed
    assert check.lhs > 0
    assert check.relative_gap < 1e-6
    fluid = stokes_state.grid.fluid
    volumes = stokes_state.grid.cell_volumes
    assert abs(np.sum(np.where(fluid, volumes * stokes_state.p, 0.0))) < 1e-8


def test_zero_extension_keeps_the_norm(stokes_state):
    """||u~||_{L^2(D)} = ||u||_{L^2(D_eps)} and u~ = 0 on the solid cells."""
    ext = zero_extend(stokes_state)
    assert ext.l2_norm_squared() == pytest.approx(fluid_l2_norm_squared(stokes_state), rel=1e-12)
    assert np.all(ext.velocity[~ext.fluid] == 0.0)
    assert not ext.grid.solid.any()


def test_brinkman_with_zero_resistance_is_stokes(empty_ball, stokes_state):
    """Same grid, same forcing and M = 0: identical discrete solution."""
    grid = perforated_grid(empty_ball)
    state = solve_brinkman(
        empty_ball.outer, grid, np.zeros((3, 3)), g=swirl(empty_ball.outer), tol=1e-10
    )
    np.testing.assert_array_equal(state.u, stokes_state.u)
    np.testing.assert_array_equal(state.p, stokes_state.p)


def test_friction_reduces_the_flow(empty_ball, stokes_state):
    """Brinkman friction mu M u with M = (3 pi / 4) I lowers the kinetic energy."""
    grid = perforated_grid(empty_ball)
    state = solve_brinkman(
        empty_ball.outer, grid, BALL_RESISTANCE * np.eye(3), g=swirl(empty_ball.outer), tol=1e-10
    )
    assert energy_check(state).passed
    assert fluid_l2_norm_squared(state) < fluid_l2_norm_squared(stokes_state)


def test_brinkman_rejects_bad_resistance(empty_ball):
    grid = perforated_grid(empty_ball)
    with pytest.raises(InvalidParameterError):
        solve_brinkman(empty_ball.outer, grid, [[1.0, 2.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    with pytest.raises(InvalidParameterError):
        solve_brinkman(empty_ball.outer, grid, -np.eye(3))


def test_remap_preserves_the_integral(single_hole, rng):
    """Hole-graded to uniform: the volume integral of every component is unchanged."""
    source = perforated_grid(single_hole)
    target = StaggeredGrid.uniform(-1.0, 1.0, 10)
    values = rng.normal(size=source.shape + (3,))
    values[~source.fluid] = 0.0
    out = remap_cells(source, values, target)
    before = np.einsum("ijk,ijkc->c", source.cell_volumes, values)
    after = np.einsum("ijk,ijkc->c", target.cell_volumes, out)
    scale = max(1.0, float(np.max(np.abs(before))))
    np.testing.assert_allclose(after, before, rtol=0.0, atol=1e-12 * scale)


def test_remap_keeps_constants_and_matching_grids(single_hole, rng):
    source = perforated_grid(single_hole)
    target = StaggeredGrid.uniform(-1.0, 1.0, 7)
    constant = remap_cells(source, np.full(source.shape, 2.5), target)
    np.testing.assert_allclose(constant, 2.5, atol=1e-13)
    values = rng.normal(size=source.shape)
    np.testing.assert_allclose(remap_cells(source, values, source), values, atol=1e-13)
    with pytest.raises(InvalidInputError):
        remap_cells(source, values, StaggeredGrid.uniform(-1.0, 2.0, 7))
    with pytest.raises(InvalidInputError):
        remap_cells(source, np.zeros((2, 2, 2)), target)


def test_energy_check_is_the_literal_inequality(stokes_state):
    """Scaling u by s scales lhs by s^2 and rhs by s: doubled fails, halved passes."""
    assert energy_check(stokes_state).passed
    for scale, expected in ((2.0, False), (0.5, True)):
        scaled = dataclasses.replace(stokes_state, u=scale * stokes_state.u)
        check = energy_check(scaled)
        assert check.passed is expected
        assert check.passed == (check.lhs <= check.rhs + ENERGY_RTOL * abs(check.rhs))


def test_convective_work_vanishes(rng):
    """u . M convective_load(u, rho) is zero to rounding for any u and positive rho."""
    grid = StaggeredGrid.graded(
        -1.0, 1.0, 0.1, 0.3, focus=[(0.2,), (-0.1,), (0.0,)], fine_halfwidth=0.2
    )
    periodic = StaggeredGrid.uniform(-1.0, 1.0, (5, 6, 7), periodic=(True, False, True))
    for g in (grid, periodic):
        ops = MacOperators(g)
        u = rng.normal(size=g.n_faces_total)
        rho = rng.uniform(0.5, 2.0, size=g.shape)
        load = ops.convective_load(u, rho)
        scale = float(np.sum(np.abs(u * ops.face_mass_vector * load)))
        assert abs(float(u @ (ops.face_mass_vector * load))) <= 1e-12 * scale


def test_step_rejection_halves_twenty_times_then_gives_up(empty_ball, monkeypatch):
    """A step that can never keep the density positive is retried after each of 20 halvings."""

    class _StillSolver:
        def solve(self, rhs):
            return np.zeros_like(rhs)

    grid = perforated_grid(empty_ball)
    zeros = np.zeros(grid.n_faces_total)
    controls = PseudoTimeControls()
    marcher = CompressibleMarcher(grid, CompressibleParams(), 0.9, zeros, zeros, controls)
    marcher.state.rho[0] = -1.0
    monkeypatch.setattr(marcher, "_system", lambda dt: _StillSolver())
    with pytest.raises(PositivityFailureError):
        marcher.advance()
    assert MAX_STEP_REJECTIONS == 20
    assert marcher.state.rejections == MAX_STEP_REJECTIONS
    assert marcher.state.dt == controls.dt_max * 0.5**MAX_STEP_REJECTIONS


def test_compressible_parameter_checks():
    """gamma >= 3 and beta > 3 (gamma + 1)."""
    CompressibleParams(gamma=3.0, beta=13.0)
    with pytest.raises(InvalidParameterError):
        CompressibleParams(gamma=3.0, beta=12.0)
    with pytest.raises(InvalidParameterError):
        CompressibleParams(gamma=2.0, beta=13.0)
    with pytest.raises(InvalidParameterError):
        CompressibleParams(mass=-1.0)


def test_pressure_law_has_zero_mean():
    """p = eps^-beta (rho^gamma - <rho^gamma>)."""
    rho = np.linspace(0.5, 1.5, 27).reshape(3, 3, 3)
    p = pressure_from_density(rho, gamma=3.0, beta=13.0, epsilon=0.5)
    assert np.mean(p) == pytest.approx(0.0, abs=1e-6)
    np.testing.assert_allclose(pressure_from_density(np.ones((2, 2, 2)), 3.0, 13.0, 0.5), 0.0)
    with pytest.raises(InvalidParameterError):
        pressure_from_density(-rho, 3.0, 13.0, 0.5)


def test_unforced_compressible_state_is_at_rest(empty_ball):
    """No forcing: zero velocity and the uniform density mass / |D_eps|."""
    state = solve_compressible_steady(empty_ball, params=CompressibleParams(mass=2.0))
    assert state.zero_velocity()
    assert state.iterations == 0
    assert state.mass() == pytest.approx(2.0, rel=1e-12)
    assert flatness(state.rho, 3.0, state.grid) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.slow
def test_forced_compressible_state_conserves_mass(empty_ball):
    """Swirl forcing at low Mach number: mass conserved, density nearly flat."""
    controls = PseudoTimeControls(tol=1e-6, max_steps=5000)
    state = solve_compressible_steady(empty_ball, g=swirl(empty_ball.outer), controls=controls)
    assert state.metadata["mass_defect"] < 1e-10
    assert np.min(state.rho[state.grid.fluid]) > 0
    assert flatness(state.rho, 3.0, state.grid) < 1e-2


@pytest.mark.slow
def test_stiff_pressure_flattens_the_density(unit_box):
    """gamma = 3, beta = 13 at eps = 0.5 and 0.35: steady, conservative, dissipative, flatter."""
    params = CompressibleParams(gamma=3.0, beta=13.0)
    controls = PseudoTimeControls(tol=1e-8, max_steps=20000)
    flat = []
    for eps in (0.5, 0.35):
        pd = build_perforated_domain(unit_box, eps)
        state = solve_compressible_steady(pd, params=params, g=swirl(unit_box), controls=controls)
        assert state.residual <= 1e-6
        assert state.metadata["mass_defect"] < 1e-10
        check = energy_check(state)
        assert check.lhs <= check.rhs + ENERGY_RTOL * abs(check.rhs)
        assert check.passed
        flat.append(flatness(state.rho, params.gamma, state.grid))
    assert flat[1] < flat[0]


def test_bogovskii_solves_the_divergence_problem(empty_ball):
    """div v = f on fluid cells, v = 0 on fixed faces, linear in f."""
    grid = perforated_grid(empty_ball)
    f = centered_coordinate(grid, 0)
    v = discrete_bogovskii(grid, f)
    div = MacOperators(grid).cell_divergence(v)
    assert np.max(np.abs(np.where(grid.fluid, div - f, 0.0))) < 1e-8
    np.testing.assert_array_equal(v[grid.fixed_faces()], 0.0)
    np.testing.assert_allclose(discrete_bogovskii(grid, 2.0 * f), 2.0 * v, atol=1e-8)


def test_bogovskii_rejects_data_with_nonzero_mean(empty_ball):
    grid = perforated_grid(empty_ball)
    with pytest.raises(InvalidInputError):
        discrete_bogovskii(grid, np.where(grid.fluid, 1.0, 0.0))
    with pytest.raises(InvalidInputError):
        discrete_bogovskii(grid, np.zeros((2, 2, 2)))


@pytest.mark.slow
def test_bogovskii_ratio_is_uniform_in_eps():
    """||v||_{W^{1,2}} / ||f||_{L^2} varies little between eps = 0.5 and 0.35."""
    samples = bogovskii_sweep([0.5, 0.35])
    ratios = [s.ratio for s in samples]
    assert all(s.max_defect < 1e-8 for s in samples)
    assert all(s.linearity_gap < 1e-8 for s in samples)
    assert max(ratios) / min(ratios) < 1.5


def test_observed_order_input_checks():
    np.testing.assert_allclose(observed_order([4.0, 1.0], [0.2, 0.1]), [2.0])
    with pytest.raises(InvalidParameterError):
        observed_order([1.0], [0.1])
    with pytest.raises(InvalidParameterError):
        observed_order([1.0, 0.0], [0.2, 0.1])


@pytest.mark.slow
@pytest.mark.parametrize(
    "resistance", [None, BALL_RESISTANCE * np.eye(3)], ids=["stokes", "brinkman"]
)
def test_manufactured_solution_converges(resistance):
    """Velocity error decays at least like h^1.7 over three refinements of a uniform grid."""
    study = refinement_study(ManufacturedSolution(resistance=resistance), cells=(8, 16, 32))
    assert study.errors[0] > study.errors[1] > study.errors[2]
    assert study.min_order >= 1.7
