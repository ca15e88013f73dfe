"""
Exterior Stokes cell problem around one obstacle, truncated to the ball B_R.

For k = 1..3 the flow w_k with w_k = 0 on the obstacle and w_k = e_k on |x| = R is
computed through its disturbance v_k = w_k - e_k, which vanishes on the truncation
boundary and equals -e_k on the obstacle. The drag matrix is the discrete energy
F_ik = v_i^T K v_k. All three directions share one factorization.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike
from scipy.interpolate import RegularGridInterpolator

from brinkhom.core.exceptions import (
    DomainError,
    InvalidParameterError,
    ResolutionError,
    SolverError,
)
from brinkhom.services.cellflow.modal import ModalField, wall_factor
from brinkhom.services.fdsolver.grid import (
    MIN_CELLS_ACROSS_HOLE,
    StaggeredGrid,
    minimal_uniform_cells,
)
from brinkhom.services.fdsolver.operators import MacOperators
from brinkhom.services.fdsolver.stokes import IncompressibleSystem
from brinkhom.services.geometry import HoleShape
from brinkhom.utils.export import write_vtk_structured
from brinkhom.utils.helpers import FloatArray, as_points, unit_vector
from brinkhom.utils.validators import is_positive_semidefinite, is_symmetric

logger = logging.getLogger(__name__)

MIN_TRUNCATION_RADIUS = 10.0
SYMMETRY_RTOL = 1e-8
PSD_TOL = 1e-10


def analytic_sphere_solution(x: ArrayLike, k: int) -> tuple[FloatArray, FloatArray]:
    """
    Stokes flow past the unit ball with w = e_k at infinity:

        w = e_k - 3/(4r) (e_k + (e_k.n) n) - 1/(4r^3) (e_k - 3 (e_k.n) n)
        q = -(3/2) (e_k.x) / r^3
    """
    points, single = as_points(x)
    if np.any(np.linalg.norm(points, axis=1) < 1.0):
        raise DomainError("The sphere solution is defined for |x| >= 1 only")
    field_k = ModalField.sphere(unit_vector(k))
    u, q = field_k.velocity(points), field_k.pressure(points)
    return (u[0], q[0]) if single else (u, q)


def cell_grid(
    shape: HoleShape,
    R: float,
    h: float,
    growth: float = 1.2,
    coarse_fraction: float = 0.1,
) -> tuple[StaggeredGrid, np.ndarray]:
    """
    Centre-graded grid on [-R, R]^3: spacing h within 1.25 obstacle radii of the origin,
    growing geometrically up to coarse_fraction * R. Cells of the obstacle and cells
    outside B_R are solid. Returns the grid and the obstacle cell mask.
    """
    radius = shape.bounding_radius
    coarse = max(h, coarse_fraction * R)
    grid = StaggeredGrid.graded(
        -R, R, h, coarse, focus=[[0.0], [0.0], [0.0]], fine_halfwidth=1.25 * radius, growth=growth
    )
    points = grid.cell_points()
    obstacle = shape.contains(points).reshape(grid.shape)
    outside = (np.linalg.norm(points, axis=1) >= R).reshape(grid.shape)
    return grid.with_solid(obstacle | outside), obstacle


def uniform_faces(grid: StaggeredGrid, k: int) -> FloatArray:
    """Stacked face samples of the constant field e_k."""
    return np.concatenate([np.full(grid.n_faces(a), float(a == k)) for a in range(3)])


def drag_from_fields(grid: StaggeredGrid, fields: list[FloatArray]) -> FloatArray:
    """F_ik = v_i^T K v_k for stacked face fields v_k."""
    stiffness = MacOperators(grid).stiffness
    images = [stiffness @ v for v in fields]
    n = len(fields)
    drag = np.zeros((n, n))
    for i in range(n):
        for k in range(n):
            drag[i, k] = float(fields[i] @ images[k])
    return drag


@dataclass
class CellSolution:
    shape: HoleShape
    truncation_radius: float
    h: float
    grid: StaggeredGrid
    obstacle: np.ndarray  # obstacle cell mask
    disturbances: list[FloatArray]  # v_k = w_k - e_k on the faces
    pressures: list[FloatArray]  # q_k, grid.shape, mean zero over fluid cells
    drag: FloatArray  # F_ik = int grad w_i : grad w_k
    iterations: list[int] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    histories: list[list[float]] = field(default_factory=list)

    @cached_property
    def operators(self) -> MacOperators:
        return MacOperators(self.grid)

    def velocity_faces(self, k: int) -> FloatArray:
        return self.disturbances[k] + uniform_faces(self.grid, k)

    def cell_velocity(self, k: int) -> FloatArray:
        return self.operators.cell_velocity(self.velocity_faces(k))

    def max_divergence(self) -> float:
        worst = 0.0
        for v in self.disturbances:
            div = np.where(self.grid.fluid, self.operators.cell_divergence(v), 0.0)
            worst = max(worst, float(np.max(np.abs(div))))
        return worst

    def corrected_drag(self, max_iter: int = 50) -> FloatArray:
        """
        Drag with the truncation bias removed: divided by the wall factor of a ball whose
        free-space drag 6 pi a matches the corrected mean diagonal.
        """
        R = self.truncation_radius
        mean = float(np.trace(self.drag)) / 3.0
        radius = mean / (6.0 * np.pi)
        for _ in range(max_iter):
            updated = mean / (6.0 * np.pi * wall_factor(min(radius / R, 0.5)))
            if abs(updated - radius) <= 1e-12 * radius:
                radius = updated
                break
            radius = updated
        return self.drag / wall_factor(min(radius / R, 0.5))

    def field_error(self, k: int = 0) -> float:
        """Relative discrete L^2 error against the sphere solution on B_{R/2} minus B_2."""
        if not self.shape.is_ball:
            raise InvalidParameterError("A closed-form reference exists for ball obstacles only")
        radius = self.shape.bounding_radius
        points = self.grid.cell_points()
        r = np.linalg.norm(points, axis=1)
        region = (r > 2.0 * radius) & (r < 0.5 * self.truncation_radius)
        reference = ModalField.sphere(unit_vector(k), radius).velocity(points[region])
        computed = self.cell_velocity(k).reshape(-1, 3)[region]
        volumes = self.grid.cell_volumes.ravel()[region]
        gap = np.sum(volumes * np.sum((computed - reference) ** 2, axis=1))
        norm = np.sum(volumes * np.sum(reference**2, axis=1))
        return float(np.sqrt(gap / norm))

    # Sampling for the near field of correctors

    @cached_property
    def _axes(self) -> tuple[FloatArray, FloatArray, FloatArray]:
        return tuple(self.grid.centers(a) for a in range(3))  # type: ignore[return-value]

    @cached_property
    def _velocity_interpolators(self) -> list[RegularGridInterpolator]:
        return [
            RegularGridInterpolator(self._axes, self.cell_velocity(k), bounds_error=False, fill_value=None)
            for k in range(3)
        ]

    @cached_property
    def _gradient_interpolators(self) -> list[RegularGridInterpolator]:
        out = []
        for k in range(3):
            velocity = self.cell_velocity(k)
            grad = np.stack(
                [np.stack(np.gradient(velocity[..., i], *self._axes), axis=-1) for i in range(3)],
                axis=-2,
            )
            out.append(RegularGridInterpolator(self._axes, grad, bounds_error=False, fill_value=None))
        return out

    @cached_property
    def _pressure_interpolators(self) -> list[RegularGridInterpolator]:
        return [
            RegularGridInterpolator(self._axes, q, bounds_error=False, fill_value=None)
            for q in self.pressures
        ]

    @cached_property
    def _pressure_gradient_interpolators(self) -> list[RegularGridInterpolator]:
        out = []
        for q in self.pressures:
            grad = np.stack(np.gradient(q, *self._axes), axis=-1)
            out.append(RegularGridInterpolator(self._axes, grad, bounds_error=False, fill_value=None))
        return out

    def sample_velocity(self, points: FloatArray, k: int) -> FloatArray:
        return self._velocity_interpolators[k](points)

    def sample_gradient(self, points: FloatArray, k: int) -> FloatArray:
        return self._gradient_interpolators[k](points)

    def sample_pressure(self, points: FloatArray, k: int) -> FloatArray:
        return self._pressure_interpolators[k](points)

    def sample_pressure_gradient(self, points: FloatArray, k: int) -> FloatArray:
        return self._pressure_gradient_interpolators[k](points)

    def export_vtk(self, directory: str | Path) -> list[Path]:
        """One legacy VTK file per field: w_1..w_3 and q_1..q_3 on the cell centers."""
        out = Path(directory)
        paths = []
        for k in range(3):
            paths.append(
                write_vtk_structured(
                    out / f"w_{k + 1}.vtk", self._axes, vectors={f"w_{k + 1}": self.cell_velocity(k)}
                )
            )
            paths.append(
                write_vtk_structured(
                    out / f"q_{k + 1}.vtk", self._axes, scalars={f"q_{k + 1}": self.pressures[k]}
                )
            )
        return paths


def _check_resolution(grid: StaggeredGrid, shape: HoleShape, R: float) -> None:
    radius = shape.bounding_radius
    across = grid.cells_across(np.zeros(3), radius)
    if across < MIN_CELLS_ACROSS_HOLE:
        raise ResolutionError(
            f"Obstacle of radius {radius:.4g} spans only {across} cells",
            minimal_cells=minimal_uniform_cells(2.0 * R, radius),
        )


def solve_cell_problem(
    shape: HoleShape | None = None,
    R: float = 30.0,
    h: float | None = None,
    tol: float = 1e-8,
    growth: float = 1.2,
) -> CellSolution:
    shape = shape or HoleShape.unit_ball()
    radius = shape.bounding_radius
    if R < MIN_TRUNCATION_RADIUS:
        raise InvalidParameterError(f"Truncation radius must be at least {MIN_TRUNCATION_RADIUS:g}, got {R}")
    if not tol > 0:
        raise InvalidParameterError(f"Tolerance must be positive, got {tol}")
    h = h if h is not None else radius / 8.0
    if not h > 0:
        raise InvalidParameterError(f"Grid spacing must be positive, got {h}")
    if h > radius / 8.0:
        logger.warning(f"Spacing h={h:g} exceeds radius/8 = {radius / 8.0:g}; drag will be biased")

    grid, obstacle = cell_grid(shape, R, h, growth=growth)
    _check_resolution(grid, shape, R)
    logger.info(f"Cell problem: R={R:g}, h={h:g}, grid {grid.shape}, {int(obstacle.sum())} obstacle cells")

    system = IncompressibleSystem(grid, mu=1.0, tol=tol)
    obstacle_faces = grid.faces_of_cells(obstacle)
    disturbances, pressures = [], []
    iterations, residuals, histories = [], [], []
    for k in range(3):
        fixed = np.where(obstacle_faces, -uniform_faces(grid, k), 0.0)
        v, q, result = system.solve(np.zeros(grid.n_faces_total), fixed_values=fixed)
        disturbances.append(v)
        pressures.append(np.where(grid.fluid, q, 0.0))
        iterations.append(result.iterations)
        residuals.append(result.residual)
        histories.append(list(result.history))
        logger.info(f"Cell direction {k + 1}: {result.iterations} iterations, residual {result.residual:.2e}")

    drag = drag_from_fields(grid, disturbances)
    return CellSolution(
        shape=shape,
        truncation_radius=float(R),
        h=float(h),
        grid=grid,
        obstacle=obstacle,
        disturbances=disturbances,
        pressures=pressures,
        drag=drag,
        iterations=iterations,
        residuals=residuals,
        histories=histories,
    )


def drag_matrix(cs: CellSolution) -> FloatArray:
    """The drag matrix of a solved cell problem, checked to be symmetric and PSD."""
    drag = np.array(cs.drag, dtype=float)
    if not is_symmetric(drag, rel_tol=SYMMETRY_RTOL):
        raise SolverError(f"Drag matrix is not symmetric: {drag.tolist()}")
    if not is_positive_semidefinite(drag, tol=PSD_TOL):
        raise SolverError(f"Drag matrix is not positive semidefinite: {drag.tolist()}")
    return drag
