"""
Perforated domain bookkeeping.

The domain D is covered by the lattice of cubes x_i + (-eps, eps)^3 with x_i in (2 eps Z)^3.
Only cubes whose closure lies in D carry a hole x_i + eps^3 T. Each such cell splits into:
- hole:    x_i + eps^3 T
- inner:   ball of radius eps/2 minus the hole
- annulus: ball of radius eps minus the ball of radius eps/2
- corner:  cube minus the ball of radius eps
"""

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike

from brinkhom.core.exceptions import CellIndexError, InvalidParameterError, InvalidShapeError
from brinkhom.services.geometry.quadrature import BoxMinusBall, QuadratureRegion, Shell
from brinkhom.services.geometry.shapes import HoleShape, OuterDomain
from brinkhom.utils.helpers import FloatArray
from brinkhom.utils.validators import validate_epsilon

logger = logging.getLogger(__name__)

_LATTICE_SLACK = 1e-9


class RegionKind(str, Enum):
    HOLE = "hole"
    INNER = "inner"  # B_{eps/2} minus the hole
    ANNULUS = "annulus"  # B_eps minus B_{eps/2}
    CORNER = "corner"  # cube minus B_eps
    OUTSIDE = "outside"


@dataclass(frozen=True, eq=False)
class PerforatedDomain:
    outer: OuterDomain
    epsilon: float
    shape: HoleShape
    centers: FloatArray  # (N, 3) lattice points, lexicographic order
    indices: np.ndarray  # (N, 3) integer lattice coordinates, centers = 2 eps * indices

    @property
    def hole_scale(self) -> float:
        return self.epsilon**3

    @property
    def n_holes(self) -> int:
        return int(self.centers.shape[0])

    @property
    def hole_radius(self) -> float:
        return self.hole_scale * self.shape.bounding_radius

    @property
    def cell_volume(self) -> float:
        return (2.0 * self.epsilon) ** 3

    @property
    def covered_volume(self) -> float:
        return self.n_holes * self.cell_volume

    @property
    def hole_volume(self) -> float:
        return self.n_holes * self.hole_scale**3 * self.shape.volume

    @property
    def perforated_volume(self) -> float:
        return self.outer.volume() - self.hole_volume

    def _lookup(self, idx: np.ndarray) -> np.ndarray:
        """Position of lattice indices in the center list, -1 when absent."""
        out = np.full(idx.shape[0], -1, dtype=np.int64)
        if self.n_holes == 0:
            return out
        lo = self.indices.min(axis=0)
        span = self.indices.max(axis=0) - lo + 1
        shifted = idx - lo
        valid = np.all((shifted >= 0) & (shifted < span), axis=1)
        keys = (self.indices - lo) @ np.array([span[1] * span[2], span[2], 1])
        probe = shifted[valid] @ np.array([span[1] * span[2], span[2], 1])
        pos = np.searchsorted(keys, probe)
        pos = np.clip(pos, 0, keys.size - 1)
        found = keys[pos] == probe
        hits = np.flatnonzero(valid)
        out[hits[found]] = pos[found]
        return out

    def locate(self, points: ArrayLike) -> tuple[np.ndarray, FloatArray]:
        """Interior cell index of each point (-1 outside all interior cells) and offset to its center."""
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        idx = np.rint(pts / (2.0 * self.epsilon)).astype(np.int64)
        cell = self._lookup(idx)
        offset = pts - 2.0 * self.epsilon * idx
        return cell, offset

    def hole_mask(self, points: ArrayLike) -> np.ndarray:
        cell, offset = self.locate(points)
        mask = np.zeros(cell.shape[0], dtype=bool)
        inside = cell >= 0
        if np.any(inside):
            mask[inside] = self.shape.contains(offset[inside] / self.hole_scale)
        return mask

    def fluid_mask(self, points: ArrayLike) -> np.ndarray:
        return self.outer.contains(points) & ~self.hole_mask(points)


@dataclass(frozen=True, eq=False)
class CellRegions:
    index: int
    center: FloatArray
    epsilon: float
    shape: HoleShape

    @property
    def r_hole(self) -> float:
        return self.epsilon**3 * self.shape.bounding_radius

    @property
    def r_mid(self) -> float:
        return 0.5 * self.epsilon

    @property
    def r_out(self) -> float:
        return self.epsilon

    def hole_mask(self, points: FloatArray) -> np.ndarray:
        return self.shape.contains((np.asarray(points) - self.center) / self.epsilon**3)

    def classify(self, points: ArrayLike) -> np.ndarray:
        local = np.asarray(points, dtype=float).reshape(-1, 3) - self.center
        r = np.linalg.norm(local, axis=1)
        labels = np.full(local.shape[0], RegionKind.CORNER.value, dtype="<U8")
        labels[r < self.r_out] = RegionKind.ANNULUS.value
        labels[r < self.r_mid] = RegionKind.INNER.value
        labels[self.shape.contains(local / self.epsilon**3)] = RegionKind.HOLE.value
        labels[np.max(np.abs(local), axis=1) > self.epsilon] = RegionKind.OUTSIDE.value
        return labels

    def volumes(self) -> dict[RegionKind, float]:
        eps = self.epsilon
        ball = 4.0 / 3.0 * np.pi
        hole = eps**9 * self.shape.volume
        return {
            RegionKind.HOLE: hole,
            RegionKind.INNER: ball * (0.5 * eps) ** 3 - hole,
            RegionKind.ANNULUS: ball * (eps**3 - (0.5 * eps) ** 3),
            RegionKind.CORNER: (2.0 * eps) ** 3 - ball * eps**3,
        }

    def quadrature_region(self, kind: RegionKind) -> QuadratureRegion:
        name = f"cell{self.index}:{kind.value}"
        if kind == RegionKind.INNER:
            inner = self.epsilon**3 * self.shape.inscribed_radius
            exclude = None if self.shape.is_ball else self.hole_mask
            return Shell(self.center, inner, self.r_mid, exclude=exclude, name=name)
        if kind == RegionKind.ANNULUS:
            return Shell(self.center, self.r_mid, self.r_out, name=name)
        if kind == RegionKind.CORNER:
            return BoxMinusBall(self.center, self.epsilon, self.r_out, name=name)
        if kind == RegionKind.HOLE and self.shape.is_ball:
            return Shell(self.center, 0.0, self.r_hole, name=name)
        raise InvalidParameterError(f"No quadrature rule for region {kind.value} of this shape")


def build_perforated_domain(
    outer: OuterDomain,
    epsilon: float,
    shape: HoleShape | None = None,
) -> PerforatedDomain:
    if not validate_epsilon(epsilon):
        raise InvalidParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    shape = shape or HoleShape.unit_ball()
    if shape.bounding_radius > 1.0 + _LATTICE_SLACK:
        raise InvalidShapeError()

    step = 2.0 * epsilon
    lower, upper = outer.bounding_box()
    first = np.ceil((lower + epsilon) / step - _LATTICE_SLACK).astype(np.int64)
    last = np.floor((upper - epsilon) / step + _LATTICE_SLACK).astype(np.int64)

    if np.any(last < first):
        indices = np.zeros((0, 3), dtype=np.int64)
    else:
        axes = [np.arange(a, b + 1) for a, b in zip(first, last, strict=True)]
        grid = np.meshgrid(*axes, indexing="ij")
        indices = np.stack([g.ravel() for g in grid], axis=1)
        indices = indices[outer.contains_cube(indices * step, epsilon)]

    centers = indices.astype(float) * step
    centers.setflags(write=False)
    indices.setflags(write=False)

    logger.info(f"Built perforated domain: eps={epsilon:g}, {indices.shape[0]} interior cells")
    return PerforatedDomain(
        outer=outer,
        epsilon=float(epsilon),
        shape=shape,
        centers=centers,
        indices=indices,
    )


def cell_regions(pd: PerforatedDomain, i: int) -> CellRegions:
    if not 0 <= i < pd.n_holes:
        raise CellIndexError(i, pd.n_holes)
    return CellRegions(index=i, center=pd.centers[i], epsilon=pd.epsilon, shape=pd.shape)
