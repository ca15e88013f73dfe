"""
Manufactured solutions for grid-refinement studies on hole-free boxes.

u* = curl(a(x) a(y) a(z) e_3) with a(t) = (1 - t^2)^2 on (-1, 1)^3 vanishes with its
first derivatives on the walls and is divergence free; p* = xyz has zero mean. The
forcing f = -mu Lap u* + grad p* (+ mu M u*) makes (u*, p*) exact for the Stokes and
Brinkman systems.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from brinkhom.core.exceptions import InvalidParameterError
from brinkhom.services.fdsolver.grid import StaggeredGrid
from brinkhom.services.fdsolver.state import FlowState
from brinkhom.services.fdsolver.stokes import solve_brinkman
from brinkhom.services.geometry import OuterDomain
from brinkhom.utils.helpers import FloatArray

logger = logging.getLogger(__name__)


def _bump(t: FloatArray) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray]:
    """a, a', a'', a''' for a(t) = (1 - t^2)^2."""
    t2 = t * t
    return (1.0 - t2) ** 2, -4.0 * t + 4.0 * t * t2, -4.0 + 12.0 * t2, 24.0 * t


@dataclass(frozen=True, eq=False)
class ManufacturedSolution:
    mu: float = 1.0
    resistance: FloatArray | None = None  # Brinkman matrix; None for Stokes

    def velocity(self, points: ArrayLike) -> FloatArray:
        x = np.asarray(points, dtype=float).reshape(-1, 3)
        ax, dax, _, _ = _bump(x[:, 0])
        ay, day, _, _ = _bump(x[:, 1])
        az, _, _, _ = _bump(x[:, 2])
        return np.column_stack((ax * day * az, -dax * ay * az, np.zeros(x.shape[0])))

    def pressure(self, points: ArrayLike) -> FloatArray:
        x = np.asarray(points, dtype=float).reshape(-1, 3)
        return x[:, 0] * x[:, 1] * x[:, 2]

    def laplacian(self, points: ArrayLike) -> FloatArray:
        x = np.asarray(points, dtype=float).reshape(-1, 3)
        ax, dax, ddax, dddax = _bump(x[:, 0])
        ay, day, dday, ddday = _bump(x[:, 1])
        az, _, ddaz, _ = _bump(x[:, 2])
        lap1 = ddax * day * az + ax * ddday * az + ax * day * ddaz
        lap2 = -(dddax * ay * az + dax * dday * az + dax * ay * ddaz)
        return np.column_stack((lap1, lap2, np.zeros(x.shape[0])))

    def forcing(self, points: ArrayLike) -> FloatArray:
        x = np.asarray(points, dtype=float).reshape(-1, 3)
        grad_p = np.column_stack((x[:, 1] * x[:, 2], x[:, 0] * x[:, 2], x[:, 0] * x[:, 1]))
        f = -self.mu * self.laplacian(x) + grad_p
        if self.resistance is not None:
            f = f + self.mu * self.velocity(x) @ np.asarray(self.resistance, dtype=float).T
        return f

    def face_error(self, state: FlowState) -> float:
        """Face-mass weighted discrete L^2 error of the velocity."""
        grid = state.grid
        exact = np.concatenate(
            [self.velocity(grid.face_points(a))[:, a] for a in range(3)]
        )
        weights = state.operators.face_mass_vector
        return float(np.sqrt(np.sum(weights * (state.u - exact) ** 2)))

    def solve(self, cells: int, tol: float = 1e-10) -> FlowState:
        grid = StaggeredGrid.uniform(-1.0, 1.0, cells)
        # M = 0 is the Stokes system on the unperforated box
        m = np.zeros((3, 3)) if self.resistance is None else self.resistance
        return solve_brinkman(OuterDomain.box(), grid, m, f=self.forcing, mu=self.mu, tol=tol)


def observed_order(errors: Sequence[float], spacings: Sequence[float]) -> FloatArray:
    """Pairwise orders log(e_i / e_{i+1}) / log(h_i / h_{i+1})."""
    e = np.asarray(errors, dtype=float)
    h = np.asarray(spacings, dtype=float)
    if e.size != h.size or e.size < 2:
        raise InvalidParameterError("Need at least two (error, spacing) pairs of equal length")
    if np.any(e <= 0) or np.any(h <= 0):
        raise InvalidParameterError("Errors and spacings must be positive")
    return np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])


@dataclass
class RefinementStudy:
    cells: list[int]
    spacings: list[float]
    errors: list[float]
    orders: list[float] = field(default_factory=list)

    @property
    def min_order(self) -> float:
        return min(self.orders) if self.orders else float("nan")


def refinement_study(
    solution: ManufacturedSolution,
    cells: Sequence[int] = (8, 16, 32),
    tol: float = 1e-10,
) -> RefinementStudy:
    errors, spacings = [], []
    for n in cells:
        state = solution.solve(n, tol=tol)
        errors.append(solution.face_error(state))
        spacings.append(state.grid.spacing)
        logger.info(f"Manufactured solution on {n}^3 cells: L2 error {errors[-1]:.4e}")
    orders = observed_order(errors, spacings)
    return RefinementStudy(
        cells=list(cells), spacings=spacings, errors=errors, orders=[float(o) for o in orders]
    )
