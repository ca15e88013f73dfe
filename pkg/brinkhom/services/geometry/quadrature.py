"""
Quadrature over cell regions.

Spherical shells use a product rule: adaptive Gauss-Kronrod in log(r) (or r when the
shell reaches the origin), Gauss-Legendre in cos(theta) and the trapezoid rule in phi.
The angular order is doubled until two consecutive orders agree at probe radii.
Boxes use tensor Gauss-Legendre with order doubling; cube-minus-ball regions are the
exact difference of a box and a ball rule. Integrands may be scalar or vector valued:
they map (N, 3) points to (N,) or (N, m) values.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike
from scipy.integrate import quad_vec

from brinkhom.config import settings
from brinkhom.core.exceptions import QuadratureError
from brinkhom.utils.helpers import FloatArray

logger = logging.getLogger(__name__)

Integrand = Callable[[FloatArray], np.ndarray]

_PROBE_COUNT = 5


@dataclass(frozen=True, eq=False)
class Shell:
    center: ArrayLike
    r_inner: float
    r_outer: float
    exclude: Callable[[FloatArray], np.ndarray] | None = None
    name: str = "shell"


@dataclass(frozen=True, eq=False)
class Box:
    center: ArrayLike
    half_width: float
    name: str = "box"


@dataclass(frozen=True, eq=False)
class BoxMinusBall:
    center: ArrayLike
    half_width: float
    radius: float
    name: str = "box-minus-ball"


QuadratureRegion = Shell | Box | BoxMinusBall


def ball(center: ArrayLike, radius: float, name: str = "ball") -> Shell:
    return Shell(center, 0.0, radius, name=name)


@lru_cache(maxsize=16)
def angular_rule(order: int) -> tuple[FloatArray, FloatArray]:
    """Unit directions and weights (summing to 4 pi) of the product sphere rule."""
    mu, w_mu = np.polynomial.legendre.leggauss(order)
    n_phi = 2 * order
    phi = 2.0 * np.pi * (np.arange(n_phi) + 0.5) / n_phi
    sin_theta = np.sqrt(1.0 - mu**2)
    directions = np.stack(
        (
            np.outer(sin_theta, np.cos(phi)),
            np.outer(sin_theta, np.sin(phi)),
            np.outer(mu, np.ones(n_phi)),
        ),
        axis=-1,
    ).reshape(-1, 3)
    weights = np.outer(w_mu, np.full(n_phi, 2.0 * np.pi / n_phi)).ravel()
    directions.setflags(write=False)
    weights.setflags(write=False)
    return directions, weights


def _evaluate(integrand: Integrand, points: FloatArray, exclude: Integrand | None) -> np.ndarray:
    values = np.asarray(integrand(points), dtype=float)
    if exclude is not None:
        mask = exclude(points)
        values = values.copy()
        values[mask] = 0.0
    return values


def _sphere_mean(region: Shell, integrand: Integrand, order: int, r: float) -> np.ndarray:
    directions, weights = angular_rule(order)
    points = np.asarray(region.center, dtype=float) + r * directions
    values = _evaluate(integrand, points, region.exclude)
    return np.tensordot(weights, values, axes=(0, 0))


def _choose_angular_order(
    region: Shell,
    integrand: Integrand,
    order: int,
    max_order: int,
    angular_tol: float,
) -> int:
    lo = max(region.r_inner, 1e-12 * region.r_outer)
    probes = np.geomspace(lo, region.r_outer, _PROBE_COUNT + 2)[1:-1]
    while True:
        coarse = np.array([_sphere_mean(region, integrand, order, r) for r in probes])
        fine = np.array([_sphere_mean(region, integrand, 2 * order, r) for r in probes])
        scale = max(float(np.max(np.abs(fine))), 1e-300)
        gap = float(np.max(np.abs(fine - coarse))) / scale
        if gap <= angular_tol:
            return 2 * order
        if 2 * order >= max_order:
            raise QuadratureError(region.name, gap, detail="Angular refinement did not converge")
        order *= 2


def _integrate_shell(
    region: Shell,
    integrand: Integrand,
    order: int,
    rel_tol: float,
    abs_tol: float,
    max_order: int,
    angular_tol: float,
) -> float | FloatArray:
    if region.r_outer <= region.r_inner:
        sample = _sphere_mean(region, integrand, 2, max(region.r_outer, 1.0))
        return np.zeros_like(sample) if np.ndim(sample) else 0.0

    order = _choose_angular_order(region, integrand, order, max_order, angular_tol)

    if region.r_inner > 0:

        def radial(s: float) -> np.ndarray:
            r = float(np.exp(s))
            return r**3 * _sphere_mean(region, integrand, order, r)

        a, b = float(np.log(region.r_inner)), float(np.log(region.r_outer))
    else:

        def radial(s: float) -> np.ndarray:
            return s**2 * _sphere_mean(region, integrand, order, s)

        a, b = 0.0, float(region.r_outer)

    value, error, info = quad_vec(
        radial, a, b, epsabs=abs_tol, epsrel=rel_tol, full_output=True, limit=2000
    )
    if not info.success:
        raise QuadratureError(region.name, float(np.max(error)))
    return value if np.ndim(value) else float(value)


def _box_rule(region: Box, order: int) -> tuple[FloatArray, FloatArray]:
    nodes, w = np.polynomial.legendre.leggauss(order)
    h = region.half_width
    c = np.asarray(region.center, dtype=float)
    gx, gy, gz = np.meshgrid(nodes, nodes, nodes, indexing="ij")
    points = c + h * np.stack((gx.ravel(), gy.ravel(), gz.ravel()), axis=1)
    weights = (h**3) * np.einsum("i,j,k->ijk", w, w, w).ravel()
    return points, weights


def _integrate_box(
    region: Box,
    integrand: Integrand,
    order: int,
    rel_tol: float,
    max_order: int,
) -> float | FloatArray:
    previous = None
    while True:
        points, weights = _box_rule(region, order)
        value = np.tensordot(weights, np.asarray(integrand(points), dtype=float), axes=(0, 0))
        if previous is not None:
            scale = max(float(np.max(np.abs(value))), 1e-300)
            gap = float(np.max(np.abs(value - previous))) / scale
            if gap <= rel_tol:
                return value if np.ndim(value) else float(value)
            if 2 * order > max_order:
                raise QuadratureError(region.name, gap)
        previous = value
        order *= 2


def region_quadrature(
    region: QuadratureRegion,
    integrand: Integrand,
    order: int | None = None,
    rel_tol: float | None = None,
    abs_tol: float | None = None,
    max_order: int | None = None,
    angular_tol: float = 1e-8,
) -> float | FloatArray:
    """Integrate over a shell, box or box-minus-ball region."""
    order = order or settings.quadrature_angular_order
    rel_tol = rel_tol if rel_tol is not None else settings.quadrature_rel_tol
    abs_tol = abs_tol if abs_tol is not None else settings.quadrature_abs_tol
    max_order = max_order or settings.quadrature_max_angular_order

    if isinstance(region, Shell):
        return _integrate_shell(region, integrand, order, rel_tol, abs_tol, max_order, angular_tol)
    if isinstance(region, Box):
        return _integrate_box(region, integrand, order, max(rel_tol, angular_tol), max_order)

    box_value = _integrate_box(
        Box(region.center, region.half_width, name=region.name),
        integrand,
        order,
        max(rel_tol, angular_tol),
        max_order,
    )
    ball_value = _integrate_shell(
        ball(region.center, region.radius, name=region.name),
        integrand,
        order,
        rel_tol,
        abs_tol,
        max_order,
        angular_tol,
    )
    return box_value - ball_value
