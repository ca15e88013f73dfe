"""
Steady compressible Navier-Stokes in the perforated domain with the stiff pressure
p = eps^-beta rho^gamma, reached by semi-implicit pseudo-time marching.

Per step:
- viscous and dilatational stress implicit, convection explicit
- linearized pressure implicit with coefficients frozen at the mean density, so one
  factorization serves every step of a given size; the deviation is lagged
- density updated conservatively from the new face fluxes, so mass telescopes exactly
- a step that drives the density negative is rejected and retried with half the step
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from tenacity import RetryCallState, retry, retry_if_exception_type, stop_after_attempt

from brinkhom.core.exceptions import (
    InvalidParameterError,
    PositivityFailureError,
    PseudoTimeDivergenceError,
)
from brinkhom.services.fdsolver.grid import StaggeredGrid, mask_holes, perforated_grid
from brinkhom.services.fdsolver.operators import MacOperators
from brinkhom.services.fdsolver.saddle import InnerSolver
from brinkhom.services.fdsolver.state import FlowMode, FlowState, Forcing, StressParams, sample_faces
from brinkhom.services.geometry import PerforatedDomain
from brinkhom.utils.helpers import FloatArray

logger = logging.getLogger(__name__)

MAX_STEP_REJECTIONS = 20


@dataclass(frozen=True)
class CompressibleParams:
    gamma: float = 3.0  # adiabatic exponent
    beta: float = 13.0  # Mach scaling exponent
    mass: float | None = None  # total mass; defaults to |D|
    mu: float = 1.0
    eta: float = 0.0

    def __post_init__(self) -> None:
        if self.gamma < 3.0:
            raise InvalidParameterError(f"gamma must be at least 3, got {self.gamma}")
        if not self.beta > 3.0 * (self.gamma + 1.0):
            raise InvalidParameterError(
                f"beta must exceed 3(gamma + 1) = {3.0 * (self.gamma + 1.0):g}, got {self.beta}"
            )
        if self.mass is not None and self.mass <= 0:
            raise InvalidParameterError(f"Total mass must be positive, got {self.mass}")


@dataclass(frozen=True)
class PseudoTimeControls:
    dt_max: float = 0.25
    cfl: float = 0.5  # convective bound on dt * |u| / h
    acoustic_cfl: float = 1000.0  # bound on dt * c / h
    tol: float = 1e-6  # steady residual
    max_steps: int = 5000
    divergence_window: int = 200
    divergence_growth: float = 10.0


def pressure_from_density(
    rho: FloatArray,
    gamma: float,
    beta: float,
    epsilon: float,
    fluid: np.ndarray | None = None,
    volumes: FloatArray | None = None,
) -> FloatArray:
    """p = eps^-beta (rho^gamma - <rho^gamma>), mean taken over fluid cells, zero elsewhere."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise InvalidParameterError("Density must be non-negative")
    fluid = np.ones(rho.shape, dtype=bool) if fluid is None else fluid
    weights = np.ones(rho.shape) if volumes is None else volumes
    power = rho**gamma
    mean = float(np.sum(np.where(fluid, weights * power, 0.0)) / np.sum(np.where(fluid, weights, 0.0)))
    return np.where(fluid, epsilon ** (-beta) * (power - mean), 0.0)


def flatness(rho: FloatArray, gamma: float, grid: StaggeredGrid) -> float:
    """||rho - <rho>||_{L^{2 gamma}} over the fluid cells."""
    fluid = grid.fluid
    volumes = grid.cell_volumes
    mean = float(np.sum(np.where(fluid, volumes * rho, 0.0)) / np.sum(np.where(fluid, volumes, 0.0)))
    q = 2.0 * gamma
    return float(np.sum(np.where(fluid, volumes * np.abs(rho - mean) ** q, 0.0)) ** (1.0 / q))


@dataclass
class _MarchState:
    u: FloatArray
    rho: FloatArray  # fluid-cell density, compressed
    dt: float
    history: list[float] = field(default_factory=list)
    dt_history: list[float] = field(default_factory=list)
    rejections: int = 0


def _halve_step(retry_state: RetryCallState) -> None:
    marcher: CompressibleMarcher = retry_state.args[0]
    marcher.state.dt *= 0.5
    marcher.state.rejections += 1
    logger.warning(f"Negative density, retrying with dt={marcher.state.dt:.3e}")


class CompressibleMarcher:
    def __init__(
        self,
        grid: StaggeredGrid,
        params: CompressibleParams,
        epsilon: float,
        f_faces: FloatArray,
        g_faces: FloatArray,
        controls: PseudoTimeControls,
        domain_volume: float | None = None,
    ):
        self.grid = grid
        self.params = params
        self.epsilon = epsilon
        self.controls = controls
        self.stress = StressParams(mu=params.mu, eta=params.eta)
        self.ops = MacOperators(grid)

        fixed = grid.fixed_faces()
        self.free = np.flatnonzero(~fixed)
        self.cells = np.flatnonzero(grid.fluid.ravel())
        self.volumes = self.ops.cell_volume_vector[self.cells]
        self.mass_faces = self.ops.face_mass_vector[self.free]

        div = self.ops.divergence.tocsc()[:, self.free].tocsr()[self.cells]
        self.div = div
        self.weak_div_t = (sp.diags(self.volumes) @ div).T.tocsr()
        self.viscous = (
            params.mu * self.ops.stiffness[self.free][:, self.free]
            + self.stress.dilatation * (div.T @ sp.diags(self.volumes) @ div)
        ).tocsr()
        self.grad_div = (div.T @ sp.diags(self.volumes) @ div).tocsr()

        fluid_volume = float(self.volumes.sum())
        mass = params.mass if params.mass is not None else (domain_volume or grid.volume)
        self.mass = mass
        self.rho_mean = mass / fluid_volume
        self.sound2 = epsilon ** (-params.beta) * params.gamma * self.rho_mean ** (params.gamma - 1.0)
        self.f = f_faces[self.free]
        self.g = g_faces[self.free]
        self.h_min = grid.min_spacing

        self.state = _MarchState(
            u=np.zeros(self.free.size),
            rho=np.full(self.cells.size, self.rho_mean),
            dt=controls.dt_max,
        )
        self._factor_dt: float | None = None
        self._solver: InnerSolver | None = None

    def _pressure(self, rho: FloatArray) -> FloatArray:
        return self.epsilon ** (-self.params.beta) * rho**self.params.gamma

    def _face_density(self, rho: FloatArray) -> FloatArray:
        full = np.zeros(self.grid.n_cells)
        full[self.cells] = rho
        return self.ops.scalar_on_faces(full)[self.free]

    def _full(self, u: FloatArray) -> FloatArray:
        out = np.zeros(self.grid.n_faces_total)
        out[self.free] = u
        return out

    def _system(self, dt: float) -> InnerSolver:
        if self._solver is None or self._factor_dt != dt:
            matrix = (
                sp.diags(self.rho_mean / dt * self.mass_faces)
                + self.viscous
                + dt * self.rho_mean * self.sound2 * self.grad_div
            )
            self._solver = InnerSolver(matrix.tocsr())
            self._factor_dt = dt
        return self._solver

    def stable_step(self) -> float:
        speed = float(np.max(np.abs(self.state.u))) if self.state.u.size else 0.0
        dt = self.controls.dt_max
        dt = min(dt, self.controls.acoustic_cfl * self.h_min / np.sqrt(self.sound2))
        if speed > 0:
            dt = min(dt, self.controls.cfl * self.h_min / speed)
        return dt

    @retry(
        retry=retry_if_exception_type(PositivityFailureError),
        stop=stop_after_attempt(MAX_STEP_REJECTIONS + 1),
        before_sleep=_halve_step,
        reraise=True,
    )
    def advance(self) -> tuple[FloatArray, FloatArray]:
        """One pseudo-time step from the current state; returns (u, rho) without committing."""
        s = self.state
        dt = s.dt
        rho_faces = self._face_density(s.rho)
        u_full = self._full(s.u)
        rho_full = np.zeros(self.grid.n_cells)
        rho_full[self.cells] = s.rho
        convective = self.ops.convective_load(u_full, rho_full)[self.free]

        lagged = self.div @ ((rho_faces - self.rho_mean) * s.u)
        pressure = self._pressure(s.rho) - dt * self.sound2 * lagged
        rhs = (
            self.rho_mean / dt * self.mass_faces * s.u
            + self.mass_faces * (rho_faces * self.f + self.g - convective)
            + self.weak_div_t @ pressure
        )
        u_new = self._system(dt).solve(rhs)
        rho_new = s.rho - dt * (self.div @ (rho_faces * u_new))
        if np.min(rho_new) < 0.0:
            raise PositivityFailureError(
                f"Density reached {float(np.min(rho_new)):.3e} with dt={dt:.3e}"
            )
        return u_new, rho_new

    def _quantize(self, dt: float) -> float:
        """Round down to dt_max / 2^k so factorizations are reused."""
        level = max(0, int(np.ceil(np.log2(self.controls.dt_max / dt) - 1e-12)))
        return self.controls.dt_max * 2.0 ** (-level)

    def march(self) -> int:
        c = self.controls
        s = self.state
        steady_steps = 0
        for step in range(1, c.max_steps + 1):
            bound = self._quantize(self.stable_step())
            if s.dt > bound:
                s.dt, steady_steps = bound, 0
            elif s.dt < bound and steady_steps >= 50:
                s.dt, steady_steps = min(2.0 * s.dt, bound), 0
            steady_steps += 1
            u_new, rho_new = self.advance()
            residual = max(
                float(np.max(np.abs(u_new - s.u))) / s.dt if u_new.size else 0.0,
                float(np.max(np.abs(rho_new - s.rho))) / (s.dt * self.rho_mean),
            )
            s.u, s.rho = u_new, rho_new
            s.history.append(residual)
            s.dt_history.append(s.dt)
            if not np.isfinite(residual):
                raise PseudoTimeDivergenceError("Non-finite residual", history=s.history)
            if step % 50 == 0:
                logger.debug(f"Pseudo-time step {step}: residual {residual:.3e}, dt {s.dt:.3e}")
            if residual <= c.tol:
                return step
            window = s.history[-c.divergence_window - 1 :]
            if len(window) > c.divergence_window and residual > c.divergence_growth * min(window):
                raise PseudoTimeDivergenceError(
                    f"Residual grew to {residual:.3e} over {c.divergence_window} steps",
                    history=s.history,
                )
        raise PseudoTimeDivergenceError(
            f"No steady state after {c.max_steps} steps (residual {s.history[-1]:.3e})",
            history=s.history,
        )

    def to_state(self, steps: int, f_faces: FloatArray, g_faces: FloatArray) -> FlowState:
        rho = np.zeros(self.grid.n_cells)
        rho[self.cells] = self.state.rho
        rho = rho.reshape(self.grid.shape)
        p = pressure_from_density(
            rho,
            self.params.gamma,
            self.params.beta,
            self.epsilon,
            fluid=self.grid.fluid,
            volumes=self.grid.cell_volumes,
        )
        return FlowState(
            grid=self.grid,
            u=self._full(self.state.u),
            p=p,
            stress=self.stress,
            f=f_faces,
            g=g_faces,
            mode=FlowMode.COMPRESSIBLE,
            rho=rho,
            rho0=self.rho_mean,
            iterations=steps,
            residual=self.state.history[-1] if self.state.history else 0.0,
            residual_history=list(self.state.history),
            metadata={
                "epsilon": self.epsilon,
                "convective": True,
                "gamma": self.params.gamma,
                "beta": self.params.beta,
                "mass": self.mass,
                "mean_density": self.rho_mean,
                "rejections": self.state.rejections,
                "dt_history": list(self.state.dt_history),
            },
        )


def solve_compressible_steady(
    pd: PerforatedDomain,
    grid: StaggeredGrid | None = None,
    params: CompressibleParams | None = None,
    f: Forcing = None,
    g: Forcing = None,
    controls: PseudoTimeControls | None = None,
    cells_per_diameter: int = 4,
) -> FlowState:
    """March the compressible system to a steady state in the perforated domain."""
    params = params or CompressibleParams()
    controls = controls or PseudoTimeControls()
    if grid is None:
        grid = perforated_grid(pd, cells_per_diameter=cells_per_diameter)
    else:
        grid = mask_holes(grid.without_solid(), pd)

    f_faces = sample_faces(grid, f)
    g_faces = sample_faces(grid, g)
    marcher = CompressibleMarcher(
        grid, params, pd.epsilon, f_faces, g_faces, controls, domain_volume=pd.outer.volume()
    )
    logger.info(
        f"Compressible march eps={pd.epsilon:g}: mean density {marcher.rho_mean:.6g}, "
        f"sound speed {np.sqrt(marcher.sound2):.3e}"
    )

    if not np.any(f_faces) and not np.any(g_faces):
        steps = 0
    else:
        steps = marcher.march()

    state = marcher.to_state(steps, f_faces, g_faces)
    state.metadata.update(n_holes=pd.n_holes, mass_defect=abs(state.mass() - marcher.mass) / marcher.mass)
    logger.info(
        f"Compressible steady state after {steps} steps, "
        f"mass defect {state.metadata['mass_defect']:.2e}"
    )
    return state
