"""
Discrete right inverse of the divergence with zero boundary values.

The operator returns the face velocity of least Dirichlet energy whose cell divergence
equals the data on every fluid cell. It is linear in the data and realized by one
saddle-point solve with the Stokes system at unit viscosity and zero load.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from brinkhom.core.exceptions import InvalidInputError, InvalidParameterError
from brinkhom.services.fdsolver.grid import StaggeredGrid, perforated_grid
from brinkhom.services.fdsolver.operators import MacOperators
from brinkhom.services.fdsolver.stokes import IncompressibleSystem
from brinkhom.services.geometry import HoleShape, OuterDomain, build_perforated_domain
from brinkhom.utils.helpers import FloatArray

logger = logging.getLogger(__name__)

BOGOVSKII_TOL = 1e-10
MEAN_TOL = 1e-12


def _fluid_data(grid: StaggeredGrid, fdata: FloatArray) -> FloatArray:
    f = np.asarray(fdata, dtype=float)
    if f.shape != grid.shape:
        raise InvalidInputError(f"Divergence data has shape {f.shape}, grid has {grid.shape}")
    f = np.where(grid.fluid, f, 0.0)
    volumes = grid.cell_volumes
    total = float(np.sum(volumes * f))
    scale = float(np.sum(volumes * np.abs(f)))
    if abs(total) > MEAN_TOL * max(scale, 1e-300):
        raise InvalidInputError(
            f"Divergence data must have zero mean over the fluid cells (integral {total:.3e})"
        )
    return f


def discrete_bogovskii(
    grid: StaggeredGrid,
    fdata: FloatArray,
    tol: float = BOGOVSKII_TOL,
    system: IncompressibleSystem | None = None,
) -> FloatArray:
    """
    Stacked face field v with v = 0 on fixed faces and div v = fdata on fluid cells.

    A prebuilt `system` for the same grid may be passed to reuse its factorization.
    """
    f = _fluid_data(grid, fdata)
    if system is None:
        system = IncompressibleSystem(grid, mu=1.0, tol=tol)
    elif system.grid is not grid:
        raise InvalidParameterError("Bogovskii system was built for a different grid")

    stranded = grid.fluid.ravel() & ~np.isin(np.arange(grid.n_cells), system.active_index)
    if np.any(f.ravel()[stranded]):
        raise InvalidInputError("Divergence data is nonzero on fluid cells without free faces")

    if not np.any(f):
        return np.zeros(grid.n_faces_total)
    v, _, result = system.solve(np.zeros(grid.n_faces_total), divergence=f)
    logger.debug(
        f"Bogovskii solve: {result.iterations} Uzawa iterations, divergence defect {result.residual:.2e}"
    )
    return v


def sobolev_norm(grid: StaggeredGrid, v: FloatArray, ops: MacOperators | None = None) -> float:
    """Discrete W^{1,2} norm: sqrt(v^T K v + v^T M_u v)."""
    ops = ops or MacOperators(grid)
    return float(np.sqrt(v @ (ops.stiffness @ v) + v @ (ops.face_mass_vector * v)))


def fluid_l2(grid: StaggeredGrid, values: FloatArray) -> float:
    return float(np.sqrt(np.sum(np.where(grid.fluid, grid.cell_volumes * values**2, 0.0))))


def bogovskii_norm_ratio(grid: StaggeredGrid, v: FloatArray, fdata: FloatArray) -> float:
    """||v||_{W^{1,2}} / ||f||_{L^2}, the quantity that stays bounded uniformly in eps."""
    f_norm = fluid_l2(grid, np.asarray(fdata, dtype=float))
    if f_norm == 0.0:
        return 0.0
    return sobolev_norm(grid, v) / f_norm


def centered_coordinate(grid: StaggeredGrid, axis: int = 0) -> FloatArray:
    """Cell coordinate along `axis` minus its volume-weighted mean over the fluid cells."""
    x = np.broadcast_to(
        grid.centers(axis).reshape([-1 if a == axis else 1 for a in range(3)]), grid.shape
    )
    volumes = np.where(grid.fluid, grid.cell_volumes, 0.0)
    mean = float(np.sum(volumes * x) / np.sum(volumes))
    return np.where(grid.fluid, x - mean, 0.0)


@dataclass
class BogovskiiSample:
    epsilon: float
    n_holes: int
    cells: int  # grid cells
    ratio: float  # ||v||_{W^{1,2}} / ||f||_{L^2}
    max_defect: float  # max |div v - f| over fluid cells
    linearity_gap: float  # max |v(f1 + f2) - v(f1) - v(f2)|


def bogovskii_sweep(
    eps_list: Sequence[float],
    outer: OuterDomain | None = None,
    shape: HoleShape | None = None,
    cells_per_diameter: int = 4,
) -> list[BogovskiiSample]:
    """Norm ratio, divergence defect and linearity gap of the operator for each eps."""
    outer = outer or OuterDomain.box()
    samples = []
    for eps in eps_list:
        pd = build_perforated_domain(outer, eps, shape)
        grid = perforated_grid(pd, cells_per_diameter=cells_per_diameter)
        system = IncompressibleSystem(grid, mu=1.0, tol=BOGOVSKII_TOL)
        f1 = centered_coordinate(grid, 0)
        f2 = centered_coordinate(grid, 1)
        v1 = discrete_bogovskii(grid, f1, system=system)
        v2 = discrete_bogovskii(grid, f2, system=system)
        v12 = discrete_bogovskii(grid, f1 + f2, system=system)

        defect = np.where(grid.fluid, np.abs(system.ops.cell_divergence(v1) - f1), 0.0)
        sample = BogovskiiSample(
            epsilon=float(eps),
            n_holes=pd.n_holes,
            cells=grid.n_cells,
            ratio=bogovskii_norm_ratio(grid, v1, f1),
            max_defect=float(defect.max()),
            linearity_gap=float(np.max(np.abs(v12 - v1 - v2))),
        )
        logger.info(
            f"Bogovskii eps={eps:g}: ratio {sample.ratio:.4g}, defect {sample.max_defect:.2e}, "
            f"linearity gap {sample.linearity_gap:.2e}"
        )
        samples.append(sample)
    return samples
