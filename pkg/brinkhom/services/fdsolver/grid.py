"""
Staggered (MAC) grids on boxes.

Pressure and density live at cell centers, velocity component a lives on the faces normal
to axis a. Edges are arbitrary monotone node coordinates per axis so grids can be refined
around holes. Periodic axes identify the first and last face.

Face vectors are stacked component by component, each block in C order of its face array.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike
from scipy.integrate import cumulative_trapezoid

from brinkhom.core.exceptions import InvalidParameterError, ResolutionError
from brinkhom.services.geometry import PerforatedDomain
from brinkhom.utils.helpers import FloatArray

logger = logging.getLogger(__name__)

MIN_CELLS_ACROSS_HOLE = 4

_GRADING_SAMPLES = 20001


def graded_edges(
    lower: float,
    upper: float,
    fine_h: float,
    coarse_h: float,
    focus: Sequence[float] = (),
    fine_halfwidth: float = 0.0,
    growth: float = 1.2,
) -> FloatArray:
    """
    Node coordinates whose spacing is fine_h within fine_halfwidth of the focus points and
    grows geometrically (ratio about `growth` per cell) up to coarse_h away from them.
    """
    if fine_h <= 0 or coarse_h < fine_h or growth <= 1.0:
        raise InvalidParameterError(
            f"Grading needs 0 < fine_h <= coarse_h and growth > 1, got "
            f"{fine_h}, {coarse_h}, {growth}"
        )
    x = np.linspace(lower, upper, _GRADING_SAMPLES)
    if len(focus):
        dist = np.min(np.abs(x[:, None] - np.asarray(focus, dtype=float)[None, :]), axis=1)
        spacing = np.minimum(
            coarse_h, fine_h + (growth - 1.0) * np.maximum(dist - fine_halfwidth, 0.0)
        )
    else:
        spacing = np.full_like(x, coarse_h)
    count = cumulative_trapezoid(1.0 / spacing, x, initial=0.0)
    n = max(int(np.ceil(count[-1])), 1)
    edges = np.interp(np.linspace(0.0, count[-1], n + 1), count, x)
    edges[0], edges[-1] = lower, upper
    return edges


@dataclass(frozen=True, eq=False)
class StaggeredGrid:
    edges: tuple[FloatArray, FloatArray, FloatArray]
    periodic: tuple[bool, bool, bool] = (False, False, False)
    solid: np.ndarray | None = field(default=None, repr=False)  # cell mask, True = obstacle

    def __post_init__(self) -> None:
        edges = tuple(np.asarray(e, dtype=float) for e in self.edges)
        if len(edges) != 3:
            raise InvalidParameterError("A staggered grid needs edges for three axes")
        for axis, e in enumerate(edges):
            if e.ndim != 1 or e.size < 2 or np.any(np.diff(e) <= 0):
                raise InvalidParameterError(f"Edges along axis {axis} must be increasing")
            e.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "periodic", tuple(bool(p) for p in self.periodic))
        shape = tuple(e.size - 1 for e in edges)
        solid = np.zeros(shape, dtype=bool) if self.solid is None else np.asarray(self.solid, bool)
        if solid.shape != shape:
            raise InvalidParameterError(f"Solid mask shape {solid.shape} != grid shape {shape}")
        solid.setflags(write=False)
        object.__setattr__(self, "solid", solid)

    # Constructors

    @classmethod
    def uniform(
        cls,
        lower: ArrayLike,
        upper: ArrayLike,
        cells: int | Sequence[int],
        periodic: Sequence[bool] = (False, False, False),
    ) -> "StaggeredGrid":
        lo = np.broadcast_to(np.asarray(lower, dtype=float), (3,))
        hi = np.broadcast_to(np.asarray(upper, dtype=float), (3,))
        n = np.broadcast_to(np.asarray(cells, dtype=int), (3,))
        if np.any(n < 1):
            raise InvalidParameterError(f"Cell counts must be positive, got {tuple(n)}")
        edges = tuple(np.linspace(lo[a], hi[a], n[a] + 1) for a in range(3))
        return cls(edges=edges, periodic=tuple(periodic))  # type: ignore[arg-type]

    @classmethod
    def graded(
        cls,
        lower: ArrayLike,
        upper: ArrayLike,
        fine_h: float,
        coarse_h: float,
        focus: Sequence[Sequence[float]],
        fine_halfwidth: float = 0.0,
        growth: float = 1.2,
    ) -> "StaggeredGrid":
        lo = np.broadcast_to(np.asarray(lower, dtype=float), (3,))
        hi = np.broadcast_to(np.asarray(upper, dtype=float), (3,))
        edges = tuple(
            graded_edges(lo[a], hi[a], fine_h, coarse_h, focus[a], fine_halfwidth, growth)
            for a in range(3)
        )
        return cls(edges=edges)  # type: ignore[arg-type]

    def with_solid(self, solid: np.ndarray) -> "StaggeredGrid":
        return StaggeredGrid(edges=self.edges, periodic=self.periodic, solid=solid)

    def without_solid(self) -> "StaggeredGrid":
        return StaggeredGrid(edges=self.edges, periodic=self.periodic)

    # Cells

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(e.size - 1 for e in self.edges)  # type: ignore[return-value]

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.shape))

    @property
    def lower(self) -> FloatArray:
        return np.array([e[0] for e in self.edges])

    @property
    def upper(self) -> FloatArray:
        return np.array([e[-1] for e in self.edges])

    def widths(self, axis: int) -> FloatArray:
        return np.diff(self.edges[axis])

    def centers(self, axis: int) -> FloatArray:
        e = self.edges[axis]
        return 0.5 * (e[:-1] + e[1:])

    @property
    def spacing(self) -> float:
        return float(max(self.widths(a).max() for a in range(3)))

    @property
    def min_spacing(self) -> float:
        return float(min(self.widths(a).min() for a in range(3)))

    @cached_property
    def cell_volumes(self) -> FloatArray:
        hx, hy, hz = (self.widths(a) for a in range(3))
        return np.einsum("i,j,k->ijk", hx, hy, hz)

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    @property
    def fluid(self) -> np.ndarray:
        return ~self.solid  # type: ignore[operator]

    def cell_points(self) -> FloatArray:
        gx, gy, gz = np.meshgrid(*(self.centers(a) for a in range(3)), indexing="ij")
        return np.column_stack((gx.ravel(), gy.ravel(), gz.ravel()))

    # Faces

    def face_positions(self, axis: int) -> FloatArray:
        """Face coordinates along their own normal axis."""
        e = self.edges[axis]
        return e[:-1] if self.periodic[axis] else e

    def dual_widths(self, axis: int) -> FloatArray:
        """Control-volume width of each face along its normal axis."""
        h = self.widths(axis)
        if self.periodic[axis]:
            return 0.5 * (h + np.roll(h, 1))
        return 0.5 * (np.concatenate(([0.0], h)) + np.concatenate((h, [0.0])))

    def face_shape(self, component: int) -> tuple[int, int, int]:
        shape = list(self.shape)
        shape[component] = self.face_positions(component).size
        return tuple(shape)  # type: ignore[return-value]

    def n_faces(self, component: int) -> int:
        return int(np.prod(self.face_shape(component)))

    @cached_property
    def face_offsets(self) -> tuple[int, int, int, int]:
        counts = [self.n_faces(a) for a in range(3)]
        return (0, counts[0], counts[0] + counts[1], sum(counts))

    @property
    def n_faces_total(self) -> int:
        return self.face_offsets[3]

    def component(self, u: FloatArray, a: int) -> FloatArray:
        """View of component a of a stacked face vector as a face array."""
        lo, hi = self.face_offsets[a], self.face_offsets[a + 1]
        return u[lo:hi].reshape(self.face_shape(a))

    def stack(self, components: Sequence[FloatArray]) -> FloatArray:
        return np.concatenate([np.asarray(c, dtype=float).ravel() for c in components])

    def face_axes(self, component: int) -> tuple[FloatArray, FloatArray, FloatArray]:
        return tuple(  # type: ignore[return-value]
            self.face_positions(a) if a == component else self.centers(a) for a in range(3)
        )

    def face_points(self, component: int) -> FloatArray:
        gx, gy, gz = np.meshgrid(*self.face_axes(component), indexing="ij")
        return np.column_stack((gx.ravel(), gy.ravel(), gz.ravel()))

    def face_weights(self) -> FloatArray:
        """Diagonal of the face mass matrix, stacked."""
        blocks = []
        for a in range(3):
            w = [self.dual_widths(b) if b == a else self.widths(b) for b in range(3)]
            blocks.append(np.einsum("i,j,k->ijk", *w).ravel())
        return np.concatenate(blocks)

    def boundary_faces(self) -> FloatArray:
        """Normal faces on non-periodic box walls, stacked boolean."""
        blocks = []
        for a in range(3):
            mask = np.zeros(self.face_shape(a), dtype=bool)
            if not self.periodic[a]:
                index: list[slice | int] = [slice(None)] * 3
                index[a] = 0
                mask[tuple(index)] = True
                index[a] = -1
                mask[tuple(index)] = True
            blocks.append(mask.ravel())
        return np.concatenate(blocks)

    def faces_of_cells(self, cells: np.ndarray) -> FloatArray:
        """Stacked boolean mask of faces bounding any of the marked cells."""
        blocks = []
        for a in range(3):
            mask = np.zeros(self.face_shape(a), dtype=bool)
            lower = [slice(None)] * 3
            upper = [slice(None)] * 3
            if self.periodic[a]:
                mask |= cells
                mask |= np.roll(cells, 1, axis=a)
            else:
                lower[a] = slice(0, -1)
                upper[a] = slice(1, None)
                mask[tuple(lower)] |= cells
                mask[tuple(upper)] |= cells
            blocks.append(mask.ravel())
        return np.concatenate(blocks)

    def fixed_faces(self) -> np.ndarray:
        """Faces carrying Dirichlet data: box walls and every face of a solid cell."""
        return self.boundary_faces() | self.faces_of_cells(self.solid)  # type: ignore[arg-type]

    def solid_faces(self) -> np.ndarray:
        return self.faces_of_cells(self.solid)  # type: ignore[arg-type]

    # Resolution

    def cells_across(self, center: ArrayLike, radius: float) -> int:
        """Smallest number of cell centers, over the three axes, inside [c - r, c + r]."""
        c = np.asarray(center, dtype=float)
        counts = []
        for a in range(3):
            x = self.centers(a)
            counts.append(int(np.count_nonzero(np.abs(x - c[a]) <= radius)))
        return min(counts)

    def local_spacing(self, center: ArrayLike, radius: float) -> float:
        c = np.asarray(center, dtype=float)
        widths = []
        for a in range(3):
            x = self.centers(a)
            near = np.abs(x - c[a]) <= max(radius, 0.5 * self.widths(a).max())
            widths.append(float(self.widths(a)[near].max()) if np.any(near) else np.inf)
        return max(widths)


def minimal_uniform_cells(extent: float, radius: float) -> int:
    return int(np.ceil(extent * MIN_CELLS_ACROSS_HOLE / (2.0 * radius)))


def check_resolution(grid: StaggeredGrid, pd: PerforatedDomain) -> None:
    """Raise ResolutionError when some hole is spanned by fewer than four cells."""
    if pd.n_holes == 0:
        return
    radius = pd.hole_radius
    worst = min(grid.cells_across(c, radius) for c in pd.centers)
    if worst < MIN_CELLS_ACROSS_HOLE:
        extent = float(np.max(grid.upper - grid.lower))
        raise ResolutionError(
            f"Holes of radius {radius:.4g} span only {worst} cells",
            minimal_cells=minimal_uniform_cells(extent, radius),
        )


def mask_holes(grid: StaggeredGrid, pd: PerforatedDomain) -> StaggeredGrid:
    check_resolution(grid, pd)
    points = grid.cell_points()
    solid = (pd.hole_mask(points) | ~pd.outer.contains(points)).reshape(grid.shape)
    logger.debug(f"Masked {int(solid.sum())} solid cells for {pd.n_holes} holes")
    return grid.with_solid(solid)


def perforated_grid(
    pd: PerforatedDomain,
    cells_per_diameter: int = MIN_CELLS_ACROSS_HOLE,
    coarse_h: float = 0.125,
    growth: float = 1.3,
) -> StaggeredGrid:
    """Box grid over the outer domain, refined around every hole and masked."""
    if cells_per_diameter < MIN_CELLS_ACROSS_HOLE:
        raise InvalidParameterError(
            f"cells_per_diameter must be at least {MIN_CELLS_ACROSS_HOLE}, got {cells_per_diameter}"
        )
    lower, upper = pd.outer.bounding_box()
    if pd.n_holes == 0:
        n = np.maximum(np.ceil((upper - lower) / coarse_h).astype(int), 8)
        return mask_holes(StaggeredGrid.uniform(lower, upper, n), pd)
    radius = pd.hole_radius
    fine_h = min(2.0 * radius / cells_per_diameter, coarse_h)
    focus = [np.unique(pd.centers[:, a]) for a in range(3)]
    grid = StaggeredGrid.graded(
        lower, upper, fine_h, coarse_h, focus, fine_halfwidth=radius, growth=growth
    )
    logger.info(
        f"Hole-graded grid for eps={pd.epsilon:g}: {grid.shape} cells, "
        f"h in [{grid.min_spacing:.3g}, {grid.spacing:.3g}]"
    )
    return mask_holes(grid, pd)
