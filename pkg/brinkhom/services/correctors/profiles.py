"""
Cell profiles: the exterior flow (w_k, q_k) around one unscaled obstacle T, in the
cell variable y = (x - x_i) / eps^3.

- SphereCellProfile: closed form for balls
- NumericalCellProfile: near field interpolated from a solved cell problem, Stokeslet far field
- UniformCellProfile: w = e_k, q = 0 everywhere (calibration family without holes)
"""

import logging
from abc import ABC, abstractmethod
from collections.abc import Callable

import numpy as np
from numpy.typing import ArrayLike

from brinkhom.core.exceptions import InvalidParameterError
from brinkhom.services.cellflow import CellSolution, ModalField
from brinkhom.services.geometry import HoleShape
from brinkhom.utils.helpers import FloatArray, unit_vector

logger = logging.getLogger(__name__)


class CellProfile(ABC):
    shape: HoleShape
    # q_k(-y) = -q_k(y): the pressure integrates to zero over every centred shell
    odd_pressure: bool = True
    degenerate: bool = False

    @abstractmethod
    def velocity(self, y: FloatArray, k: int) -> FloatArray: ...

    @abstractmethod
    def gradient(self, y: FloatArray, k: int) -> FloatArray: ...

    @abstractmethod
    def pressure(self, y: FloatArray, k: int) -> FloatArray: ...

    @abstractmethod
    def pressure_gradient(self, y: FloatArray, k: int) -> FloatArray: ...

    @abstractmethod
    def drag(self) -> FloatArray: ...

    @property
    def inner_radius(self) -> float:
        """Largest radius whose ball lies inside the obstacle."""
        return self.shape.inscribed_radius

    @property
    def exclude(self) -> Callable[[FloatArray], np.ndarray] | None:
        """Membership test of the obstacle beyond inner_radius; None for balls."""
        return None if self.shape.is_ball else self.shape.contains

    def in_hole(self, y: ArrayLike) -> np.ndarray:
        return self.shape.contains(y)


class SphereCellProfile(CellProfile):
    def __init__(self, radius: float = 1.0):
        if not 0.0 < radius <= 1.0:
            raise InvalidParameterError(f"Ball radius must lie in (0, 1], got {radius}")
        self.radius = float(radius)
        self.shape = HoleShape.unit_ball() if radius == 1.0 else HoleShape.scaled_ball(radius)
        self._fields = [ModalField.sphere(unit_vector(k), self.radius) for k in range(3)]

    def velocity(self, y: FloatArray, k: int) -> FloatArray:
        return self._fields[k].velocity(y)

    def gradient(self, y: FloatArray, k: int) -> FloatArray:
        return self._fields[k].gradient(y)

    def pressure(self, y: FloatArray, k: int) -> FloatArray:
        return self._fields[k].pressure(y)

    def pressure_gradient(self, y: FloatArray, k: int) -> FloatArray:
        return self._fields[k].pressure_gradient(y)

    def drag(self) -> FloatArray:
        return 6.0 * np.pi * self.radius * np.eye(3)

    def __repr__(self) -> str:
        return f"SphereCellProfile(radius={self.radius:g})"


class NumericalCellProfile(CellProfile):
    """
    Interpolated cell solution for |y| < near_radius, and beyond it the uniform flow plus
    the Stokeslet carrying the truncation-corrected drag.
    """

    odd_pressure = False

    def __init__(self, cs: CellSolution, near_radius: float | None = None):
        self.cs = cs
        self.shape = cs.shape
        self.near_radius = near_radius if near_radius is not None else 0.5 * cs.truncation_radius
        if not self.shape.bounding_radius < self.near_radius <= cs.truncation_radius:
            raise InvalidParameterError(
                f"Near-field radius {self.near_radius:g} must lie between the obstacle and R"
            )
        self._drag = cs.corrected_drag()
        self._far = [ModalField.far_field(self._drag, k) for k in range(3)]
        self._probe = np.array([self.near_radius, 0.0, 0.0])

    def _blend(self, y: FloatArray, near: Callable, far: Callable, zero_in_hole: bool) -> FloatArray:
        pts = np.asarray(y, dtype=float).reshape(-1, 3)
        inside = np.linalg.norm(pts, axis=1) < self.near_radius
        # far field first, with a harmless probe where the near field takes over
        out = np.array(far(np.where(inside[:, None], self._probe, pts)), dtype=float)
        if np.any(inside):
            out[inside] = near(pts[inside])
        if zero_in_hole and pts.shape[0]:
            out[self.shape.contains(pts)] = 0.0
        return out

    def velocity(self, y: FloatArray, k: int) -> FloatArray:
        return self._blend(y, lambda p: self.cs.sample_velocity(p, k), self._far[k].velocity, True)

    def gradient(self, y: FloatArray, k: int) -> FloatArray:
        return self._blend(y, lambda p: self.cs.sample_gradient(p, k), self._far[k].gradient, False)

    def pressure(self, y: FloatArray, k: int) -> FloatArray:
        return self._blend(y, lambda p: self.cs.sample_pressure(p, k), self._far[k].pressure, False)

    def pressure_gradient(self, y: FloatArray, k: int) -> FloatArray:
        return self._blend(
            y, lambda p: self.cs.sample_pressure_gradient(p, k), self._far[k].pressure_gradient, False
        )

    def drag(self) -> FloatArray:
        return self._drag

    def __repr__(self) -> str:
        return f"NumericalCellProfile(R={self.cs.truncation_radius:g}, h={self.cs.h:g})"


class UniformCellProfile(CellProfile):
    degenerate = True

    def __init__(self) -> None:
        self.shape = HoleShape.unit_ball()

    @property
    def inner_radius(self) -> float:
        return 0.0

    @property
    def exclude(self) -> None:
        return None

    def in_hole(self, y: ArrayLike) -> np.ndarray:
        return np.zeros(np.asarray(y).reshape(-1, 3).shape[0], dtype=bool)

    def velocity(self, y: FloatArray, k: int) -> FloatArray:
        n = np.asarray(y).reshape(-1, 3).shape[0]
        return np.tile(unit_vector(k), (n, 1))

    def gradient(self, y: FloatArray, k: int) -> FloatArray:
        return np.zeros((np.asarray(y).reshape(-1, 3).shape[0], 3, 3))

    def pressure(self, y: FloatArray, k: int) -> FloatArray:
        return np.zeros(np.asarray(y).reshape(-1, 3).shape[0])

    def pressure_gradient(self, y: FloatArray, k: int) -> FloatArray:
        return np.zeros((np.asarray(y).reshape(-1, 3).shape[0], 3))

    def drag(self) -> FloatArray:
        return np.zeros((3, 3))

    def __repr__(self) -> str:
        return "UniformCellProfile()"


def resolve_profile(
    shape: HoleShape,
    source: "CellProfile | CellSolution | None" = None,
) -> CellProfile:
    if isinstance(source, CellProfile):
        return source
    if isinstance(source, CellSolution):
        return NumericalCellProfile(source)
    if shape.is_ball:
        return SphereCellProfile(shape.bounding_radius)
    raise InvalidParameterError(
        f"Shape {shape.kind.value} has no closed-form cell solution; solve the cell problem first"
    )
