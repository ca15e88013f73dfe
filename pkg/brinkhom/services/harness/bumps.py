"""
Smooth compactly supported test fields.

- CurlBump: Phi = grad(psi) x e_a with psi(x) = (1 - |x - c|^2 / r^2)^4 on the ball B_r(c);
  divergence free and vanishing with its gradient on the sphere |x - c| = r
- ScalarBump: psi itself, for pressure functionals
- ConstantField: a constant vector on the whole domain
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike
from scipy.special import beta

from brinkhom.core.exceptions import InvalidParameterError
from brinkhom.services.geometry import OuterDomain, OuterKind
from brinkhom.utils.helpers import FloatArray, unit_vector

MAX_TEST_FIELDS = 8

LEVI_CIVITA = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    LEVI_CIVITA[_i, _j, _k] = 1.0
    LEVI_CIVITA[_i, _k, _j] = -1.0


def _radial_moment(power: int, degree: int) -> float:
    """int_0^1 (1 - t^2)^power t^degree dt."""
    return 0.5 * float(beta((degree + 1) / 2.0, power + 1))


@dataclass(frozen=True, eq=False)
class ScalarBump:
    center: FloatArray
    radius: float

    def _local(self, points: ArrayLike) -> tuple[FloatArray, FloatArray]:
        d = np.asarray(points, dtype=float).reshape(-1, 3) - self.center
        s = np.sum(d * d, axis=1) / self.radius**2
        return d, np.clip(1.0 - s, 0.0, None)

    def value(self, points: ArrayLike) -> FloatArray:
        _, one_minus_s = self._local(points)
        return one_minus_s**4

    def gradient(self, points: ArrayLike) -> FloatArray:
        d, one_minus_s = self._local(points)
        return (-8.0 / self.radius**2) * (one_minus_s**3)[:, None] * d

    def hessian(self, points: ArrayLike) -> FloatArray:
        d, one_minus_s = self._local(points)
        outer = np.einsum("ni,nj->nij", d, d) / self.radius**2
        h = (one_minus_s**3)[:, None, None] * np.eye(3) - 6.0 * (one_minus_s**2)[:, None, None] * outer
        return (-8.0 / self.radius**2) * h

    def integral(self) -> float:
        return 4.0 * np.pi * self.radius**3 * _radial_moment(4, 2)

    def l2_norm(self) -> float:
        return float(np.sqrt(4.0 * np.pi * self.radius**3 * _radial_moment(8, 2)))


@dataclass(frozen=True, eq=False)
class CurlBump:
    bump: ScalarBump
    axis: int

    def value(self, points: ArrayLike) -> FloatArray:
        return np.cross(self.bump.gradient(points), unit_vector(self.axis))

    def gradient(self, points: ArrayLike) -> FloatArray:
        """G[n, a, b] = d_b Phi_a, with Phi_a = eps_{a l axis} d_l psi."""
        h = self.bump.hessian(points)
        return np.einsum("al,nlb->nab", LEVI_CIVITA[:, :, self.axis], h)

    def l2_norm(self) -> float:
        # |grad psi x e_a|^2 averages to 2/3 |grad psi|^2 over each sphere
        r = self.bump.radius
        return float(np.sqrt(64.0 * (2.0 / 3.0) * 4.0 * np.pi * r * _radial_moment(6, 4)))


@dataclass(frozen=True, eq=False)
class ConstantField:
    direction: FloatArray
    volume: float  # |D|, for the L^2 norm

    def value(self, points: ArrayLike) -> FloatArray:
        n = np.asarray(points).reshape(-1, 3).shape[0]
        return np.tile(np.asarray(self.direction, dtype=float), (n, 1))

    def gradient(self, points: ArrayLike) -> FloatArray:
        return np.zeros((np.asarray(points).reshape(-1, 3).shape[0], 3, 3))

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.direction) * np.sqrt(self.volume))


def octant_bumps(outer: OuterDomain, count: int = MAX_TEST_FIELDS) -> list[ScalarBump]:
    """Bumps centred in the octants of the domain, each supported inside it."""
    if not 1 <= count <= MAX_TEST_FIELDS:
        raise InvalidParameterError(f"Between 1 and {MAX_TEST_FIELDS} test fields, got {count}")
    lower, upper = outer.bounding_box()
    mid = 0.5 * (lower + upper)
    half = 0.5 * (upper - lower)
    signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=float)
    if outer.kind == OuterKind.BALL:
        offset = 0.5 * half / np.sqrt(3.0)
    else:
        offset = 0.5 * half
    radius = 0.45 * float(half.min())
    return [ScalarBump(mid + signs[j] * offset, radius) for j in range(count)]


def divergence_free_family(outer: OuterDomain, count: int = MAX_TEST_FIELDS) -> list[CurlBump]:
    """Divergence-free fields Phi_j = grad psi_j x e_(j mod 3)."""
    return [CurlBump(b, j % 3) for j, b in enumerate(octant_bumps(outer, count))]
