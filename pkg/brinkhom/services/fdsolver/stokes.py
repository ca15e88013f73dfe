"""
Incompressible solvers on staggered grids.

- solve_stokes_perforated: Stokes or steady Navier-Stokes in the perforated domain
- solve_brinkman: the Navier-Stokes-Brinkman limit system on the hole-free domain
- channel_oracle: one-dimensional Brinkman channel profile for periodic checks
"""

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from brinkhom.config import settings
from brinkhom.core.exceptions import InvalidParameterError, PicardStagnationError
from brinkhom.services.fdsolver.grid import StaggeredGrid, mask_holes, perforated_grid
from brinkhom.services.fdsolver.operators import MacOperators
from brinkhom.services.fdsolver.saddle import InnerSolver, SaddlePointSolver, SaddleResult
from brinkhom.services.fdsolver.state import FlowMode, FlowState, Forcing, StressParams, sample_faces
from brinkhom.services.geometry import OuterDomain, OuterKind, PerforatedDomain
from brinkhom.utils.helpers import FloatArray
from brinkhom.utils.validators import is_positive_semidefinite, is_symmetric

logger = logging.getLogger(__name__)


class IncompressibleSystem:
    """
    Discrete (Brinkman-)Stokes operator of one grid, restricted to free faces.

    Fixed faces (box walls and faces of solid cells) carry Dirichlet data; pressure lives on
    active cells, those with at least one free face.
    """

    def __init__(
        self,
        grid: StaggeredGrid,
        mu: float = 1.0,
        resistance: ArrayLike | None = None,
        tol: float | None = None,
        max_iter: int | None = None,
        inner_solver: str | None = None,
    ):
        self.grid = grid
        self.ops = MacOperators(grid)
        self.mu = mu
        fixed = grid.fixed_faces()
        self.free_index = np.flatnonzero(~fixed)
        self.fixed_index = np.flatnonzero(fixed)

        matrix = mu * self.ops.stiffness
        reaction = 0.0
        if resistance is not None and np.any(resistance):
            m = np.asarray(resistance, dtype=float)
            matrix = matrix + mu * self.ops.brinkman(m)
            reaction = float(np.linalg.eigvalsh(0.5 * (m + m.T)).max())
        matrix = matrix.tocsr()
        self.a_free = matrix[self.free_index][:, self.free_index]
        self.a_coupling = matrix[self.free_index][:, self.fixed_index]

        c = self.ops.weak_divergence.tocsc()
        c_free = c[:, self.free_index].tocsr()
        self.active = np.asarray(abs(c_free).sum(axis=1)).ravel() > 0
        self.active_index = np.flatnonzero(self.active)
        self.c_free = c_free[self.active_index]
        self.c_fixed = c[:, self.fixed_index].tocsr()[self.active_index]

        volumes = self.ops.cell_volume_vector[self.active_index]
        self.saddle = SaddlePointSolver(
            self.a_free,
            self.c_free,
            volumes,
            viscosity=mu,
            reaction=reaction,
            face_mass=self.ops.face_mass_vector[self.free_index],
            tol=tol,
            max_iter=max_iter,
            inner=InnerSolver(self.a_free, method=inner_solver),
        )
        logger.debug(
            f"Incompressible system: {self.free_index.size} free faces, "
            f"{self.active_index.size} active cells"
        )

    def solve(
        self,
        load: FloatArray,
        fixed_values: FloatArray | None = None,
        divergence: FloatArray | None = None,
        p0: FloatArray | None = None,
    ) -> tuple[FloatArray, FloatArray, SaddleResult]:
        """
        Solve mu K u + mu M u - C^T p = M_u load with div u = divergence on active cells.

        Returns stacked face velocity, cell pressure (grid.shape) and the raw Uzawa result.
        """
        b = (self.ops.face_mass_vector * load)[self.free_index]
        d = np.zeros(self.active_index.size)
        if fixed_values is not None:
            g = fixed_values[self.fixed_index]
            b = b - self.a_coupling @ g
            d = d - self.c_fixed @ g
        if divergence is not None:
            d = d + (self.ops.cell_volume_vector * np.ravel(divergence))[self.active_index]
        p_start = None if p0 is None else np.ravel(p0)[self.active_index]
        result = self.saddle.solve(b, d, p_start)

        u = np.zeros(self.grid.n_faces_total)
        u[self.free_index] = result.u
        if fixed_values is not None:
            u[self.fixed_index] = fixed_values[self.fixed_index]
        p = np.zeros(self.grid.n_cells)
        p[self.active_index] = result.p
        return u, p.reshape(self.grid.shape), result


def _picard(
    system: IncompressibleSystem,
    load: FloatArray,
    rho0: float,
    relaxation: float,
    tol: float,
    max_iter: int,
) -> tuple[FloatArray, FloatArray, int, list[float]]:
    """Steady Navier-Stokes by Picard iteration with lagged convection."""
    logger.info(
        "Steady Navier-Stokes: uniqueness holds only for sufficiently small data; "
        "the Picard limit is reported as one solution"
    )
    u, p, _ = system.solve(load)
    history: list[float] = []
    best = (np.inf, u, p)
    for iteration in range(1, max_iter + 1):
        convective = system.ops.convective_load(u, rho0)
        u_new, p, _ = system.solve(load - convective, p0=p)
        scale = max(float(np.linalg.norm(u_new)), 1e-300)
        change = float(np.linalg.norm(u_new - u)) / scale
        history.append(change)
        logger.debug(f"Picard iteration {iteration}: relative change {change:.3e}")
        u = relaxation * u_new + (1.0 - relaxation) * u
        if change < best[0]:
            best = (change, u, p)
        if change <= tol or not np.any(u_new):
            return u, p, iteration, history
    raise PicardStagnationError(residual=best[0], best=(best[1], best[2]), history=history)


def _check_resistance(resistance: ArrayLike) -> FloatArray:
    m = np.asarray(resistance, dtype=float)
    if m.shape != (3, 3):
        raise InvalidParameterError(f"Resistance matrix must be 3x3, got shape {m.shape}")
    if not is_symmetric(m) or not is_positive_semidefinite(m):
        raise InvalidParameterError("Resistance matrix must be symmetric positive semidefinite")
    return m


def _solve_incompressible(
    grid: StaggeredGrid,
    f: Forcing,
    g: Forcing,
    stress: StressParams,
    rho0: float,
    resistance: FloatArray | None,
    convective: bool,
    tol: float | None,
    relaxation: float | None,
    picard_tol: float | None,
    picard_max_iter: int | None,
    mode: FlowMode,
) -> FlowState:
    f_faces = sample_faces(grid, f)
    g_faces = sample_faces(grid, g)
    system = IncompressibleSystem(grid, stress.mu, resistance=resistance, tol=tol)
    load = rho0 * f_faces + g_faces
    if convective:
        u, p, iterations, history = _picard(
            system,
            load,
            rho0,
            relaxation if relaxation is not None else settings.picard_relaxation,
            picard_tol if picard_tol is not None else settings.picard_tol,
            picard_max_iter or settings.picard_max_iter,
        )
        residual = history[-1] if history else 0.0
    else:
        u, p, result = system.solve(load)
        iterations, history, residual = result.iterations, result.history, result.residual

    state = FlowState(
        grid=grid,
        u=u,
        p=p,
        stress=stress,
        f=f_faces,
        g=g_faces,
        mode=mode,
        rho0=rho0,
        resistance=resistance,
        iterations=iterations,
        residual=residual,
        residual_history=list(history),
        metadata={"convective": convective},
    )
    logger.info(
        f"{mode.value} solve on {grid.shape} cells: {iterations} iterations, "
        f"max div {state.max_divergence():.2e}"
    )
    return state


def solve_stokes_perforated(
    pd: PerforatedDomain,
    grid: StaggeredGrid | None = None,
    f: Forcing = None,
    g: Forcing = None,
    mu: float = 1.0,
    tol: float | None = None,
    rho0: float = 1.0,
    convective: bool = False,
    eta: float = 0.0,
    relaxation: float | None = None,
    picard_tol: float | None = None,
    picard_max_iter: int | None = None,
    cells_per_diameter: int = 4,
) -> FlowState:
    """Stokes (or steady Navier-Stokes when convective) flow in the perforated domain."""
    stress = StressParams(mu=mu, eta=eta)
    if grid is None:
        grid = perforated_grid(pd, cells_per_diameter=cells_per_diameter)
    else:
        grid = mask_holes(grid.without_solid(), pd)
    state = _solve_incompressible(
        grid,
        f,
        g,
        stress,
        rho0,
        None,
        convective,
        tol,
        relaxation,
        picard_tol,
        picard_max_iter,
        FlowMode.NSE if convective else FlowMode.STOKES,
    )
    state.metadata.update(epsilon=pd.epsilon, n_holes=pd.n_holes)
    return state


def solve_brinkman(
    outer: OuterDomain,
    grid: StaggeredGrid,
    resistance: ArrayLike,
    rho0: float = 1.0,
    f: Forcing = None,
    g: Forcing = None,
    mu: float = 1.0,
    tol: float | None = None,
    convective: bool = False,
    relaxation: float | None = None,
    picard_tol: float | None = None,
    picard_max_iter: int | None = None,
) -> FlowState:
    """Navier-Stokes-Brinkman limit system with friction mu M u on the hole-free domain."""
    m = _check_resistance(resistance)
    grid = grid.without_solid()
    if outer.kind == OuterKind.BALL:
        grid = grid.with_solid(~outer.contains(grid.cell_points()).reshape(grid.shape))
    state = _solve_incompressible(
        grid,
        f,
        g,
        StressParams(mu=mu),
        rho0,
        m if np.any(m) else None,
        convective,
        tol,
        relaxation,
        picard_tol,
        picard_max_iter,
        FlowMode.BRINKMAN,
    )
    state.resistance = m
    return state


@dataclass
class ChannelProfile:
    y: FloatArray  # cell-center coordinates across the channel
    discrete: FloatArray  # dense two-point solve with the staggered stencil
    exact: FloatArray  # closed-form profile

    @property
    def max_gap(self) -> float:
        return float(np.max(np.abs(self.discrete - self.exact)))


def channel_oracle(m: float, mu: float, f1: float, ny: int, width: float = 2.0) -> ChannelProfile:
    """
    Brinkman channel -mu u'' + mu m u = f1 on (-width/2, width/2), u = 0 on the walls.

    The dense system uses the same cell-centered stencil (wall at half a cell) as the
    tangential velocity on a staggered grid with ny cells across.
    """
    if m <= 0 or mu <= 0 or ny < 2:
        raise InvalidParameterError("Channel oracle needs m > 0, mu > 0 and ny >= 2")
    edges = np.linspace(-0.5 * width, 0.5 * width, ny + 1)
    h = np.diff(edges)
    y = 0.5 * (edges[:-1] + edges[1:])
    delta = np.concatenate(([y[0] - edges[0]], np.diff(y), [edges[-1] - y[-1]]))

    gradient = np.zeros((ny + 1, ny))
    for j in range(ny + 1):
        if j < ny:
            gradient[j, j] = 1.0 / delta[j]
        if j > 0:
            gradient[j, j - 1] = -1.0 / delta[j]
    laplacian = gradient.T @ np.diag(delta) @ gradient / h[:, None]
    matrix = mu * laplacian + mu * m * np.eye(ny)
    discrete = np.linalg.solve(matrix, np.full(ny, f1))

    k = np.sqrt(m)
    exact = f1 / (mu * m) * (1.0 - np.cosh(k * y) / np.cosh(0.5 * k * width))
    return ChannelProfile(y=y, discrete=discrete, exact=exact)

