"""
Sparse MAC operators.

Everything is assembled as Kronecker products of one-dimensional operators in the C order
used by StaggeredGrid, so the same code serves uniform, graded and periodic axes:
- divergence B (faces -> cells) and its weak adjoint C = V B
- face mass weights and cell volumes
- velocity stiffness K = -M_u Laplacian with Dirichlet walls
- grad-div form B^T V B for the dilatational part of the stress
- face/cell averaging, Brinkman coupling and the convective load
"""

import logging
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from numpy.typing import ArrayLike

from brinkhom.services.fdsolver.grid import StaggeredGrid
from brinkhom.utils.helpers import FloatArray

logger = logging.getLogger(__name__)


def _face_difference(h: FloatArray, periodic: bool) -> sp.csr_matrix:
    """Cells x faces: (u_{i+1} - u_i) / h_i."""
    n = h.size
    rows = np.arange(n)
    upper = (rows + 1) % n if periodic else rows + 1
    n_faces = n if periodic else n + 1
    data = np.concatenate((-1.0 / h, 1.0 / h))
    return sp.csr_matrix(
        (data, (np.concatenate((rows, rows)), np.concatenate((rows, upper)))),
        shape=(n, n_faces),
    )


def _face_average(n: int, periodic: bool) -> sp.csr_matrix:
    """Cells x faces: (u_i + u_{i+1}) / 2."""
    rows = np.arange(n)
    upper = (rows + 1) % n if periodic else rows + 1
    n_faces = n if periodic else n + 1
    return sp.csr_matrix(
        (np.full(2 * n, 0.5), (np.concatenate((rows, rows)), np.concatenate((rows, upper)))),
        shape=(n, n_faces),
    )


def _center_gradient(delta: FloatArray, n: int, periodic: bool) -> sp.csr_matrix:
    """Nodes x cells: (u_j - u_{j-1}) / delta_j, zero wall values outside non-periodic ends."""
    if periodic:
        nodes = np.arange(n)
        return sp.csr_matrix(
            (
                np.concatenate((1.0 / delta, -1.0 / delta)),
                (np.concatenate((nodes, nodes)), np.concatenate((nodes, (nodes - 1) % n))),
            ),
            shape=(n, n),
        )
    rows, cols, data = [], [], []
    for j in range(n + 1):
        if j < n:
            rows.append(j)
            cols.append(j)
            data.append(1.0 / delta[j])
        if j > 0:
            rows.append(j)
            cols.append(j - 1)
            data.append(-1.0 / delta[j])
    return sp.csr_matrix((data, (rows, cols)), shape=(n + 1, n))


def _cell_to_face(n: int, periodic: bool) -> sp.csr_matrix:
    """Faces x cells: mean of the two neighbours, one-sided on walls."""
    if periodic:
        nodes = np.arange(n)
        return sp.csr_matrix(
            (np.full(2 * n, 0.5), (np.concatenate((nodes, nodes)), np.concatenate((nodes, (nodes - 1) % n)))),
            shape=(n, n),
        )
    rows, cols, data = [0, n], [0, n - 1], [1.0, 1.0]
    for j in range(1, n):
        rows += [j, j]
        cols += [j - 1, j]
        data += [0.5, 0.5]
    return sp.csr_matrix((data, (rows, cols)), shape=(n + 1, n))


def _kron3(a: sp.spmatrix, b: sp.spmatrix, c: sp.spmatrix) -> sp.csr_matrix:
    return sp.kron(sp.kron(a, b, format="csr"), c, format="csr")


class MacOperators:
    """Sparse operators of one StaggeredGrid, assembled lazily and cached."""

    def __init__(self, grid: StaggeredGrid):
        self.grid = grid

    def _identity(self, axis: int) -> sp.csr_matrix:
        return sp.identity(self.grid.shape[axis], format="csr")

    def _along(self, axis: int, op: sp.spmatrix, others: list[sp.spmatrix]) -> sp.csr_matrix:
        factors = list(others)
        factors[axis] = op
        return _kron3(*factors)

    # Basic operators

    @cached_property
    def divergence(self) -> sp.csr_matrix:
        g = self.grid
        blocks = []
        for a in range(3):
            d1 = _face_difference(g.widths(a), g.periodic[a])
            blocks.append(self._along(a, d1, [self._identity(b) for b in range(3)]))
        return sp.hstack(blocks, format="csr")

    @cached_property
    def cell_volume_vector(self) -> FloatArray:
        return self.grid.cell_volumes.ravel()

    @cached_property
    def weak_divergence(self) -> sp.csr_matrix:
        """C = V B: cell integrals of the divergence."""
        return sp.diags(self.cell_volume_vector) @ self.divergence

    @cached_property
    def face_mass_vector(self) -> FloatArray:
        return self.grid.face_weights()

    @cached_property
    def face_mass(self) -> sp.dia_matrix:
        return sp.diags(self.face_mass_vector)

    @cached_property
    def face_to_cell(self) -> list[sp.csr_matrix]:
        g = self.grid
        return [
            self._along(
                a, _face_average(g.shape[a], g.periodic[a]), [self._identity(b) for b in range(3)]
            )
            for a in range(3)
        ]

    @cached_property
    def cell_to_face(self) -> list[sp.csr_matrix]:
        g = self.grid
        return [
            self._along(
                a, _cell_to_face(g.shape[a], g.periodic[a]), [self._identity(b) for b in range(3)]
            )
            for a in range(3)
        ]

    # Viscous operators

    def _component_stiffness(self, a: int) -> sp.csr_matrix:
        g = self.grid
        total: sp.csr_matrix | None = None
        for d in range(3):
            weights: list[sp.spmatrix] = [
                sp.diags(g.dual_widths(e) if e == a else g.widths(e)) for e in range(3)
            ]
            if d == a:
                d1 = _face_difference(g.widths(d), g.periodic[d])
                op = d1.T @ sp.diags(g.widths(d)) @ d1
            else:
                delta = g.dual_widths(d)
                gc = _center_gradient(delta, g.shape[d], g.periodic[d])
                op = gc.T @ sp.diags(delta) @ gc
            term = self._along(d, op, weights)
            total = term if total is None else total + term
        return total  # type: ignore[return-value]

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        """Face-by-face discretization of the Dirichlet form u -> sum_a |grad u_a|^2."""
        return sp.block_diag([self._component_stiffness(a) for a in range(3)], format="csr")

    @cached_property
    def grad_div(self) -> sp.csr_matrix:
        return (self.divergence.T @ sp.diags(self.cell_volume_vector) @ self.divergence).tocsr()

    def brinkman(self, resistance: ArrayLike) -> sp.csr_matrix:
        """Face discretization of u -> M u, symmetric and PSD whenever M is."""
        m = np.asarray(resistance, dtype=float)
        volume = sp.diags(self.cell_volume_vector)
        mass = self.face_mass_vector
        offsets = self.grid.face_offsets
        blocks: list[list[sp.spmatrix | None]] = [[None] * 3 for _ in range(3)]
        for a in range(3):
            for b in range(3):
                if a == b:
                    diag = mass[offsets[a] : offsets[a + 1]]
                    blocks[a][b] = sp.diags(m[a, a] * diag)
                elif m[a, b] != 0.0:
                    blocks[a][b] = m[a, b] * (self.face_to_cell[a].T @ volume @ self.face_to_cell[b])
                else:
                    blocks[a][b] = sp.csr_matrix((self.grid.n_faces(a), self.grid.n_faces(b)))
        return sp.bmat(blocks, format="csr")

    # Field maps

    def cell_divergence(self, u: FloatArray) -> FloatArray:
        return (self.divergence @ u).reshape(self.grid.shape)

    def cell_velocity(self, u: FloatArray) -> FloatArray:
        """Face velocities averaged to cell centers, shape grid.shape + (3,)."""
        g = self.grid
        comps = [
            (self.face_to_cell[a] @ u[g.face_offsets[a] : g.face_offsets[a + 1]]).reshape(g.shape)
            for a in range(3)
        ]
        return np.stack(comps, axis=-1)

    def faces_from_cells(self, values: FloatArray) -> FloatArray:
        """Cell-centered vector field (shape + (3,)) averaged onto the faces, stacked."""
        return np.concatenate(
            [self.cell_to_face[a] @ values[..., a].ravel() for a in range(3)]
        )

    def scalar_on_faces(self, values: FloatArray) -> FloatArray:
        """Cell scalar averaged onto the faces of every component, stacked."""
        flat = values.ravel()
        return np.concatenate([self.cell_to_face[a] @ flat for a in range(3)])

    def face_areas(self, axis: int) -> FloatArray:
        """Area of every normal face of one axis, shape face_shape(axis)."""
        g = self.grid
        factors = [
            np.ones(g.face_shape(axis)[b]) if b == axis else g.widths(b) for b in range(3)
        ]
        return np.einsum("i,j,k->ijk", *factors)

    def convective_load(self, u: FloatArray, rho: FloatArray | float = 1.0) -> FloatArray:
        """
        Face values of div(m (x) v) - v div(m) / 2 with the face mass flux m = rho u and
        the cell velocity v, i.e. div(rho u (x) u) wherever mass is conserved.

        The cell operator is skew-adjoint in the volume inner product, so
        u . M_u convective_load(u) vanishes to rounding on every grid.
        """
        g = self.grid
        velocity = self.cell_velocity(u)
        density = np.broadcast_to(np.asarray(rho, dtype=float), g.shape).ravel()
        # cell integrals of the skew operator applied to each velocity component
        skew = np.zeros(g.shape + (3,))
        for a in range(3):
            lo, hi = g.face_offsets[a], g.face_offsets[a + 1]
            face_density = self.cell_to_face[a] @ density
            flux = (face_density * u[lo:hi]).reshape(g.face_shape(a)) * self.face_areas(a)
            if g.periodic[a]:
                lower, upper = flux, np.roll(flux, -1, axis=a)
            else:
                # walls are impermeable
                lower = np.take(flux, range(0, g.shape[a]), axis=a).copy()
                upper = np.take(flux, range(1, g.shape[a] + 1), axis=a).copy()
                index: list[slice | int] = [slice(None)] * 3
                index[a] = 0
                lower[tuple(index)] = 0.0
                index[a] = -1
                upper[tuple(index)] = 0.0
            skew += 0.5 * (
                upper[..., None] * np.roll(velocity, -1, axis=a)
                - lower[..., None] * np.roll(velocity, 1, axis=a)
            )
        mass = self.face_mass_vector
        return np.concatenate(
            [
                (self.face_to_cell[b].T @ skew[..., b].ravel())
                / mass[g.face_offsets[b] : g.face_offsets[b + 1]]
                for b in range(3)
            ]
        )
