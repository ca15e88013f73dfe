import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy.ndimage import binary_dilation

from brinkhom.config import settings
from brinkhom.services.fdsolver import FlowState, StaggeredGrid, sample_faces
from brinkhom.services.fdsolver.operators import MacOperators
from brinkhom.services.harness.bumps import CurlBump
from brinkhom.utils.helpers import FloatArray

logger = logging.getLogger(__name__)

SOLENOIDAL_TOL = 1e-8
RESIDUAL_FACTOR = 10.0


@dataclass
class SolenoidalityCheck:
    max_divergence: float  # over cells away from the mask
    near_mask_divergence: float  # over fluid cells touching a solid cell
    near_mask_cells: int
    passed: bool


def solenoidality_check(
    grid: StaggeredGrid,
    u: FloatArray,
    fluid: np.ndarray | None = None,
    tol: float = SOLENOIDAL_TOL,
) -> SolenoidalityCheck:
    """Max cell divergence of a face field; cells next to the mask are reported separately."""
    fluid = grid.fluid if fluid is None else np.asarray(fluid, dtype=bool)
    div = np.abs(MacOperators(grid).cell_divergence(u))
    near = fluid & binary_dilation(~fluid)
    away = fluid & ~near
    check = SolenoidalityCheck(
        max_divergence=float(div[away].max()) if np.any(away) else 0.0,
        near_mask_divergence=float(div[near].max()) if np.any(near) else 0.0,
        near_mask_cells=int(near.sum()),
        passed=False,
    )
    check.passed = check.max_divergence <= tol
    logger.debug(
        f"Solenoidality: max div {check.max_divergence:.2e} away from the mask, "
        f"{check.near_mask_divergence:.2e} on {check.near_mask_cells} cells next to it"
    )
    return check


@dataclass
class BrinkmanResidual:
    tested: FloatArray  # <R(u, p), Phi_j> per test field
    scale: FloatArray  # sum of the magnitudes of the tested terms
    tol: float
    passed: bool

    @property
    def relative(self) -> FloatArray:
        return self.tested / np.where(self.scale > 0, self.scale, 1.0)


def brinkman_residual(
    state: FlowState,
    fields: Sequence[CurlBump],
    resistance: ArrayLike | None = None,
    rho0: float | None = None,
    mu: float | None = None,
    tol: float | None = None,
) -> BrinkmanResidual:
    """
    Momentum residual  mu K u + mu M u - C^T p + M_u (rho0 div(u (x) u) - rho0 f - g)  of a
    Brinkman state, tested against each field on the free faces. The state's own resistance,
    density and viscosity are used unless overridden.
    """
    grid = state.grid
    ops = state.operators
    m = state.resistance if resistance is None else np.asarray(resistance, dtype=float)
    rho0 = state.rho0 if rho0 is None else rho0
    mu = state.stress.mu if mu is None else mu
    tol = tol if tol is not None else settings.uzawa_tol
    u, p = state.u, state.p.ravel()

    terms = [mu * (ops.stiffness @ u), -(ops.weak_divergence.T @ p)]
    if m is not None and np.any(m):
        terms.append(mu * (ops.brinkman(m) @ u))
    if state.metadata.get("convective", False):
        terms.append(ops.face_mass_vector * ops.convective_load(u, rho0))
    terms.append(-ops.face_mass_vector * (rho0 * state.f + state.g))

    free = ~grid.fixed_faces()
    tested, scale = [], []
    for phi in fields:
        samples = np.where(free, sample_faces(grid, phi.value), 0.0)
        tested.append(abs(sum(float(samples @ t) for t in terms)))
        scale.append(sum(float(np.abs(samples) @ np.abs(t)) for t in terms))
    tested_arr, scale_arr = np.array(tested), np.array(scale)
    relative = tested_arr / np.where(scale_arr > 0, scale_arr, 1.0)
    passed = bool(np.all(relative <= RESIDUAL_FACTOR * tol))
    logger.debug(f"Brinkman residual: max relative {relative.max(initial=0.0):.2e}, passed={passed}")
    return BrinkmanResidual(tested=tested_arr, scale=scale_arr, tol=tol, passed=passed)
