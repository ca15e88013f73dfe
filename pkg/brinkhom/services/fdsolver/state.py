import logging
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from brinkhom.core.exceptions import InvalidParameterError
from brinkhom.services.fdsolver.grid import StaggeredGrid
from brinkhom.services.fdsolver.operators import MacOperators
from brinkhom.utils.helpers import FloatArray

logger = logging.getLogger(__name__)

# Body force: None (zero), a constant 3-vector, or a map from (N, 3) points to (N, 3) values
Forcing = Callable[[FloatArray], ArrayLike] | ArrayLike | None


class FlowMode(str, Enum):
    STOKES = "stokes"
    NSE = "nse"
    COMPRESSIBLE = "compressible"
    BRINKMAN = "brinkman"


@dataclass(frozen=True)
class StressParams:
    mu: float = 1.0  # shear viscosity
    eta: float = 0.0  # bulk viscosity

    def __post_init__(self) -> None:
        if not self.mu > 0:
            raise InvalidParameterError(f"Viscosity mu must be positive, got {self.mu}")
        if not self.eta >= 0:
            raise InvalidParameterError(f"Bulk viscosity eta must be non-negative, got {self.eta}")

    @property
    def dilatation(self) -> float:
        """Coefficient of the div-div form in the weak stress: mu/3 + eta."""
        return self.mu / 3.0 + self.eta


def sample_faces(grid: StaggeredGrid, force: Forcing) -> FloatArray:
    """Stacked face values of component a of the force on the a-faces."""
    if force is None:
        return np.zeros(grid.n_faces_total)
    blocks = []
    if callable(force):
        for a in range(3):
            values = np.asarray(force(grid.face_points(a)), dtype=float).reshape(-1, 3)
            blocks.append(values[:, a])
    else:
        constant = np.broadcast_to(np.asarray(force, dtype=float), (3,))
        for a in range(3):
            blocks.append(np.full(grid.n_faces(a), constant[a]))
    return np.concatenate(blocks)


@dataclass
class FlowState:
    grid: StaggeredGrid
    u: FloatArray  # stacked face-normal velocities, zero on fixed faces
    p: FloatArray  # cell-centered pressure, grid.shape, zero mean over fluid cells
    stress: StressParams
    f: FloatArray  # stacked face samples of the specific force f
    g: FloatArray  # stacked face samples of the force density g
    mode: FlowMode = FlowMode.STOKES
    rho: FloatArray | None = None  # cell-centered density (compressible mode)
    rho0: float = 1.0  # constant density of incompressible modes
    resistance: FloatArray | None = None  # Brinkman matrix M (brinkman mode)
    iterations: int = 0
    residual: float = 0.0
    residual_history: list[float] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)
    _ops: MacOperators | None = field(default=None, init=False, repr=False, compare=False)

    @property
    def operators(self) -> MacOperators:
        if self._ops is None or self._ops.grid is not self.grid:
            self._ops = MacOperators(self.grid)
        return self._ops

    def velocity(self, a: int) -> FloatArray:
        return self.grid.component(self.u, a)

    def cell_velocity(self) -> FloatArray:
        return self.operators.cell_velocity(self.u)

    def divergence(self) -> FloatArray:
        return self.operators.cell_divergence(self.u)

    def max_divergence(self, fluid_only: bool = True) -> float:
        div = np.abs(self.divergence())
        if fluid_only:
            div = np.where(self.grid.fluid, div, 0.0)
        return float(div.max()) if div.size else 0.0

    def density_on_faces(self) -> FloatArray | float:
        if self.rho is None:
            return self.rho0
        return self.operators.scalar_on_faces(self.rho)

    def load(self) -> FloatArray:
        """Stacked face samples of rho f + g."""
        return self.density_on_faces() * self.f + self.g

    def mass(self) -> float:
        if self.rho is None:
            return self.rho0 * float(np.sum(np.where(self.grid.fluid, self.grid.cell_volumes, 0.0)))
        return float(np.sum(np.where(self.grid.fluid, self.rho * self.grid.cell_volumes, 0.0)))

    def zero_velocity(self) -> bool:
        return not np.any(self.u)
