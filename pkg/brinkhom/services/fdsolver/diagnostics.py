"""
Diagnostics on solved flow states.

- energy_check: discrete dissipation against the work of the forces
- zero_extend: fields of the perforated domain extended by zero into the holes
- remap_cells: conservative transfer of cell fields onto another grid over the same box
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from brinkhom.core.exceptions import InvalidInputError
from brinkhom.services.fdsolver.grid import StaggeredGrid
from brinkhom.services.fdsolver.state import FlowMode, FlowState
from brinkhom.utils.helpers import FloatArray

logger = logging.getLogger(__name__)

ENERGY_RTOL = 1e-6


@dataclass
class EnergyCheck:
    lhs: float  # dissipation: S(grad u):grad u (+ mu u.Mu in Brinkman mode)
    rhs: float  # work of the forces: (rho f + g).u
    transport: float  # discrete pressure and convective work, reported only
    passed: bool  # lhs <= rhs + rtol |rhs|

    @property
    def relative_gap(self) -> float:
        """|lhs + transport - rhs| relative to |rhs| (absolute when rhs = 0)."""
        gap = abs(self.lhs + self.transport - self.rhs)
        return gap / abs(self.rhs) if self.rhs != 0.0 else gap


def energy_check(state: FlowState, rtol: float = ENERGY_RTOL) -> EnergyCheck:
    """Pass iff lhs <= rhs + rtol |rhs|."""
    ops = state.operators
    u = state.u
    div = ops.divergence @ u
    volumes = ops.cell_volume_vector
    lhs = state.stress.mu * float(u @ (ops.stiffness @ u))
    lhs += state.stress.dilatation * float(div @ (volumes * div))
    if state.mode == FlowMode.BRINKMAN and state.resistance is not None and np.any(state.resistance):
        lhs += state.stress.mu * float(u @ (ops.brinkman(state.resistance) @ u))

    mass = ops.face_mass_vector
    rhs = float(u @ (mass * state.load()))

    transport = -float(np.sum(volumes * div * state.p.ravel()))
    if state.metadata.get("convective", False):
        density = state.rho if state.rho is not None else state.rho0
        transport += float(u @ (mass * ops.convective_load(u, density)))

    passed = lhs <= rhs + rtol * abs(rhs)
    check = EnergyCheck(lhs=lhs, rhs=rhs, transport=transport, passed=bool(passed))
    logger.debug(
        f"Energy check ({state.mode.value}): lhs {lhs:.6e}, rhs {rhs:.6e}, "
        f"transport {transport:.2e}, passed={check.passed}"
    )
    return check


def _weighted_square_sum(volumes: FloatArray, cell_values: FloatArray) -> float:
    squares = cell_values**2 if cell_values.ndim == volumes.ndim else np.sum(cell_values**2, axis=-1)
    return float(np.sum(volumes * squares))


@dataclass
class ZeroExtension:
    grid: StaggeredGrid  # the same box without the solid mask
    u: FloatArray  # stacked face velocity, zero on every face of a solid cell
    velocity: FloatArray  # cell-centered velocity, grid.shape + (3,), zero on solid cells
    p: FloatArray  # pressure, zero on solid cells
    rho: FloatArray | None  # density, zero on solid cells (compressible states only)
    fluid: np.ndarray  # mask of the perforated domain

    def l2_norm_squared(self) -> float:
        return _weighted_square_sum(self.grid.cell_volumes, self.velocity)


def zero_extend(state: FlowState) -> ZeroExtension:
    fluid = state.grid.fluid
    velocity = np.where(fluid[..., None], state.cell_velocity(), 0.0)
    solid_faces = state.grid.solid_faces()
    return ZeroExtension(
        grid=state.grid.without_solid(),
        u=np.where(solid_faces, 0.0, state.u),
        velocity=velocity,
        p=np.where(fluid, state.p, 0.0),
        rho=None if state.rho is None else np.where(fluid, state.rho, 0.0),
        fluid=fluid.copy(),
    )


def fluid_l2_norm_squared(state: FlowState) -> float:
    """Sum of V |U|^2 over the fluid cells of the perforated grid."""
    velocity = state.cell_velocity()
    squares = np.sum(velocity**2, axis=-1)
    return float(np.sum(np.where(state.grid.fluid, state.grid.cell_volumes * squares, 0.0)))


def overlap_weights(source: FloatArray, target: FloatArray) -> sparse.csr_matrix:
    """
    Row j holds the overlap lengths of target cell j with every source cell, divided by the
    target cell width. Both edge arrays must span the same interval.
    """
    source = np.asarray(source, dtype=float)
    target = np.asarray(target, dtype=float)
    if not (np.isclose(source[0], target[0]) and np.isclose(source[-1], target[-1])):
        raise InvalidInputError("Source and target edges must span the same interval")
    breaks = np.union1d(source, target)
    breaks = breaks[(breaks >= target[0]) & (breaks <= target[-1])]
    lengths = np.diff(breaks)
    keep = lengths > 0.0
    mids = 0.5 * (breaks[:-1] + breaks[1:])[keep]
    cols = np.clip(np.searchsorted(source, mids) - 1, 0, source.size - 2)
    rows = np.clip(np.searchsorted(target, mids) - 1, 0, target.size - 2)
    widths = np.diff(target)
    shape = (target.size - 1, source.size - 1)
    return sparse.csr_matrix((lengths[keep] / widths[rows], (rows, cols)), shape=shape)


def remap_cells(grid: StaggeredGrid, values: FloatArray, target: StaggeredGrid) -> FloatArray:
    """
    Conservative transfer of a cell field (shape or shape + (m,)) onto another grid of the
    same box: every target cell gets the overlap-volume weighted mean of the source cells,
    so the volume integral of each component is preserved.
    """
    out = np.asarray(values, dtype=float)
    if out.shape[:3] != grid.shape:
        raise InvalidInputError(f"Cell field of shape {out.shape} does not match grid {grid.shape}")
    for a in range(3):
        weights = overlap_weights(grid.edges[a], target.edges[a])
        moved = np.moveaxis(out, a, 0)
        mixed = weights @ moved.reshape(moved.shape[0], -1)
        out = np.moveaxis(mixed.reshape((weights.shape[0],) + moved.shape[1:]), 0, a)
    return out
