"""
Outer domains and hole shapes.

- OuterDomain: axis-aligned box or ball, closed-form volume and membership
- HoleShape: unit ball, scaled ball or superellipsoid contained in the unit ball
"""

import logging
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import gamma

from brinkhom.core.exceptions import InvalidParameterError, InvalidShapeError
from brinkhom.utils.helpers import FloatArray, fibonacci_sphere

logger = logging.getLogger(__name__)

_SLACK = 1e-9


class OuterKind(str, Enum):
    BOX = "box"
    BALL = "ball"


class ShapeKind(str, Enum):
    BALL = "ball"
    SCALED_BALL = "scaled_ball"
    SUPERELLIPSOID = "superellipsoid"


@dataclass(frozen=True)
class OuterDomain:
    kind: OuterKind
    lower: tuple[float, float, float] = (-1.0, -1.0, -1.0)
    upper: tuple[float, float, float] = (1.0, 1.0, 1.0)
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self) -> None:
        if self.kind == OuterKind.BOX:
            if any(hi <= lo for lo, hi in zip(self.lower, self.upper, strict=True)):
                raise InvalidParameterError(
                    f"Box bounds must satisfy lower < upper, got {self.lower} / {self.upper}"
                )
        elif self.radius <= 0:
            raise InvalidParameterError(f"Ball radius must be positive, got {self.radius}")

    @classmethod
    def box(
        cls,
        lower: ArrayLike = (-1.0, -1.0, -1.0),
        upper: ArrayLike = (1.0, 1.0, 1.0),
    ) -> "OuterDomain":
        lo = tuple(float(v) for v in np.asarray(lower, dtype=float))
        hi = tuple(float(v) for v in np.asarray(upper, dtype=float))
        return cls(kind=OuterKind.BOX, lower=lo, upper=hi)  # type: ignore[arg-type]

    @classmethod
    def ball(cls, center: ArrayLike = (0.0, 0.0, 0.0), radius: float = 1.0) -> "OuterDomain":
        c = tuple(float(v) for v in np.asarray(center, dtype=float))
        return cls(kind=OuterKind.BALL, center=c, radius=float(radius))  # type: ignore[arg-type]

    def volume(self) -> float:
        if self.kind == OuterKind.BOX:
            return float(np.prod(np.subtract(self.upper, self.lower)))
        return 4.0 / 3.0 * np.pi * self.radius**3

    def bounding_box(self) -> tuple[FloatArray, FloatArray]:
        if self.kind == OuterKind.BOX:
            return np.array(self.lower), np.array(self.upper)
        c = np.array(self.center)
        return c - self.radius, c + self.radius

    def contains(self, points: ArrayLike) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        if self.kind == OuterKind.BOX:
            return np.all((pts > np.array(self.lower)) & (pts < np.array(self.upper)), axis=1)
        return np.linalg.norm(pts - np.array(self.center), axis=1) < self.radius

    def contains_cube(self, centers: ArrayLike, half_width: float) -> np.ndarray:
        """Closed cubes c + [-h, h]^3 lying in the closure of the domain."""
        c = np.asarray(centers, dtype=float).reshape(-1, 3)
        if self.kind == OuterKind.BOX:
            lo_ok = np.all(c - half_width >= np.array(self.lower) - _SLACK, axis=1)
            hi_ok = np.all(c + half_width <= np.array(self.upper) + _SLACK, axis=1)
            return lo_ok & hi_ok
        far_corner = np.abs(c - np.array(self.center)) + half_width
        return np.linalg.norm(far_corner, axis=1) <= self.radius + _SLACK


@dataclass(frozen=True)
class HoleShape:
    kind: ShapeKind = ShapeKind.BALL
    radius: float = 1.0
    semi_axes: tuple[float, float, float] = (1.0, 1.0, 1.0)
    exponent: float = 2.0

    def __post_init__(self) -> None:
        if self.kind in (ShapeKind.BALL, ShapeKind.SCALED_BALL):
            if not 0.0 < self.radius <= 1.0:
                raise InvalidShapeError(f"Ball radius {self.radius} not in (0, 1]")
        else:
            if min(self.semi_axes) <= 0:
                raise InvalidShapeError(f"Semi-axes must be positive, got {self.semi_axes}")
            if self.exponent < 2.0:
                raise InvalidShapeError(f"Superellipsoid exponent {self.exponent} < 2")
            if self.bounding_radius > 1.0 + _SLACK:
                raise InvalidShapeError(
                    f"Superellipsoid reaches radius {self.bounding_radius:.4f} > 1"
                )

    @classmethod
    def unit_ball(cls) -> "HoleShape":
        return cls(kind=ShapeKind.BALL, radius=1.0)

    @classmethod
    def scaled_ball(cls, radius: float) -> "HoleShape":
        return cls(kind=ShapeKind.SCALED_BALL, radius=float(radius))

    @classmethod
    def superellipsoid(cls, a: float, b: float, c: float, exponent: float = 4.0) -> "HoleShape":
        return cls(
            kind=ShapeKind.SUPERELLIPSOID,
            semi_axes=(float(a), float(b), float(c)),
            exponent=float(exponent),
        )

    @classmethod
    def from_params(cls, kind: str, params: dict[str, float] | None = None) -> "HoleShape":
        params = params or {}
        try:
            shape_kind = ShapeKind(kind)
        except ValueError:
            raise InvalidShapeError(f"Unknown shape kind '{kind}'") from None
        if shape_kind == ShapeKind.BALL:
            return cls.unit_ball()
        if shape_kind == ShapeKind.SCALED_BALL:
            return cls.scaled_ball(params.get("radius", 0.5))
        return cls.superellipsoid(
            params.get("a", 0.8),
            params.get("b", 0.6),
            params.get("c", 0.5),
            params.get("exponent", 4.0),
        )

    @property
    def is_ball(self) -> bool:
        return self.kind != ShapeKind.SUPERELLIPSOID

    def radial_extent(self, directions: ArrayLike) -> FloatArray:
        """Distance from the origin to the boundary along unit directions."""
        d = np.asarray(directions, dtype=float).reshape(-1, 3)
        if self.is_ball:
            return np.full(d.shape[0], self.radius)
        m = self.exponent
        s = np.sum(np.abs(d / np.array(self.semi_axes)) ** m, axis=1)
        return s ** (-1.0 / m)

    def signed_distance(self, points: ArrayLike) -> FloatArray:
        """Exact for balls; radial distance to the boundary otherwise (sign exact)."""
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        r = np.linalg.norm(pts, axis=1)
        if self.is_ball:
            return r - self.radius
        safe = np.where(r > 0, r, 1.0)
        directions = np.where(r[:, None] > 0, pts / safe[:, None], np.array([1.0, 0.0, 0.0]))
        return r - self.radial_extent(directions)

    def contains(self, points: ArrayLike) -> np.ndarray:
        return self.signed_distance(points) <= 0.0

    @cached_property
    def bounding_radius(self) -> float:
        if self.is_ball:
            return self.radius
        a = np.array(self.semi_axes)
        signs = np.array(np.meshgrid([-1, 1], [-1, 1], [-1, 1])).reshape(3, -1).T
        candidates = np.vstack((fibonacci_sphere(20000), np.eye(3), signs * a))
        candidates /= np.linalg.norm(candidates, axis=1)[:, None]
        return float(self.radial_extent(candidates).max())

    @property
    def inscribed_radius(self) -> float:
        if self.is_ball:
            return self.radius
        return float(min(self.semi_axes))

    @property
    def volume(self) -> float:
        if self.is_ball:
            return 4.0 / 3.0 * np.pi * self.radius**3
        a, b, c = self.semi_axes
        m = self.exponent
        return float(8.0 * a * b * c * gamma(1.0 + 1.0 / m) ** 3 / gamma(1.0 + 3.0 / m))

    def scaled(self, factor: float) -> "HoleShape":
        if self.is_ball:
            return HoleShape.scaled_ball(self.radius * factor)
        a, b, c = self.semi_axes
        return HoleShape.superellipsoid(a * factor, b * factor, c * factor, self.exponent)
