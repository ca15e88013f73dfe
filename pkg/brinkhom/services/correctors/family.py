"""
Oscillating correctors (w_k^eps, q_k^eps) on a perforated domain.

Each interior cell x_i + (-eps, eps)^3 is split around its hole:
- hole:    w = 0, q = 0
- inner:   |x - x_i| < eps/2,      w = w_k(y), q = eps^-3 q_k(y) with y = (x - x_i)/eps^3
- annulus: eps/2 < |x - x_i| < eps, w = W_k(z), q = Q_k(z)/eps with z = (x - x_i)/eps
- corner:  w = e_k, q = 0
Boundary cells carry w = e_k, q = 0. The annulus flow (W_k, Q_k) is solved once per eps on
the unit annulus 1/2 < |z| < 1 and shared by every cell. The pressure is shifted by a
constant so that it has mean zero over D.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from brinkhom.services.cellflow import CellSolution, ModalField, project_trace, shell_solution
from brinkhom.services.correctors.profiles import CellProfile, resolve_profile
from brinkhom.services.geometry import PerforatedDomain, Shell, region_quadrature
from brinkhom.utils.helpers import FloatArray, fibonacci_sphere, unit_vector

logger = logging.getLogger(__name__)

ANNULUS_INNER = 0.5
ANNULUS_OUTER = 1.0
TRACE_SAMPLES = 256
DEFAULT_TABLE_CELLS = 48


@dataclass
class AnnulusTable:
    axes: tuple[FloatArray, FloatArray, FloatArray]
    velocity: FloatArray  # (n, n, n, 3), nan outside the annulus
    pressure: FloatArray  # (n, n, n), nan outside the annulus
    inside: np.ndarray


@dataclass(frozen=True, eq=False)
class AnnulusSolution:
    """Stokes flow on 1/2 < |z| < 1 with the inner trace of the cell profile and W = e_k outside."""

    k: int
    epsilon: float
    field: ModalField
    trace_mismatch: float  # max distance of the sampled inner trace from its projection

    def velocity(self, z: ArrayLike) -> FloatArray:
        return self.field.velocity(z)

    def gradient(self, z: ArrayLike) -> FloatArray:
        return self.field.gradient(z)

    def pressure(self, z: ArrayLike) -> FloatArray:
        return self.field.pressure(z)

    def pressure_gradient(self, z: ArrayLike) -> FloatArray:
        return self.field.pressure_gradient(z)

    def max_divergence(self, samples: int = 2000) -> float:
        directions = fibonacci_sphere(samples)
        radii = np.linspace(ANNULUS_INNER, ANNULUS_OUTER, 7)
        points = np.concatenate([r * directions for r in radii])
        return float(np.max(np.abs(self.field.divergence(points))))

    def tabulate(self, cells: int = DEFAULT_TABLE_CELLS) -> AnnulusTable:
        """Velocity and pressure on the cell centers of a local cells^3 grid over [-1, 1]^3."""
        edges = np.linspace(-ANNULUS_OUTER, ANNULUS_OUTER, cells + 1)
        centers = 0.5 * (edges[:-1] + edges[1:])
        gx, gy, gz = np.meshgrid(centers, centers, centers, indexing="ij")
        points = np.column_stack((gx.ravel(), gy.ravel(), gz.ravel()))
        r = np.linalg.norm(points, axis=1)
        inside = (r >= ANNULUS_INNER) & (r <= ANNULUS_OUTER)
        velocity = np.full(points.shape, np.nan)
        pressure = np.full(points.shape[0], np.nan)
        velocity[inside] = self.velocity(points[inside])
        pressure[inside] = self.pressure(points[inside])
        shape = (cells, cells, cells)
        return AnnulusTable(
            axes=(centers, centers, centers),
            velocity=velocity.reshape(shape + (3,)),
            pressure=pressure.reshape(shape),
            inside=inside.reshape(shape),
        )


def solve_annulus(
    profile: CellProfile,
    epsilon: float,
    k: int,
    samples: int = TRACE_SAMPLES,
) -> AnnulusSolution:
    directions = fibonacci_sphere(samples)
    # |z| = 1/2 is |y| = 1/(2 eps^2) in the cell variable
    inner_trace = profile.velocity(directions * (ANNULUS_INNER / epsilon**2), k)
    projection = project_trace(directions, inner_trace)
    field_k = shell_solution(
        ANNULUS_INNER,
        ANNULUS_OUTER,
        (projection.uniform, projection.radial),
        (unit_vector(k), np.zeros(3)),
    )
    return AnnulusSolution(k=k, epsilon=epsilon, field=field_k, trace_mismatch=projection.residual)


@dataclass(eq=False)
class CorrectorFamily:
    domain: PerforatedDomain
    profile: CellProfile
    annuli: list[AnnulusSolution]
    pressure_shift: FloatArray = field(default_factory=lambda: np.zeros(3))

    @property
    def epsilon(self) -> float:
        return self.domain.epsilon

    @property
    def n_holes(self) -> int:
        return self.domain.n_holes

    @property
    def inner_limit(self) -> float:
        """Outer radius of the inner region in the cell variable."""
        return ANNULUS_INNER / self.epsilon**2

    @property
    def trace_mismatch(self) -> float:
        return max(a.trace_mismatch for a in self.annuli)

    def _regions(self, points: ArrayLike) -> tuple[FloatArray, np.ndarray, np.ndarray, np.ndarray]:
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        cell, offset = self.domain.locate(pts)
        r = np.linalg.norm(offset, axis=1)
        interior = cell >= 0
        inner = interior & (r < ANNULUS_INNER * self.epsilon)
        annulus = interior & ~inner & (r < ANNULUS_OUTER * self.epsilon)
        hole = np.zeros_like(inner)
        if np.any(inner):
            hole[inner] = self.profile.in_hole(offset[inner] / self.domain.hole_scale)
        return offset, inner & ~hole, annulus, hole

    def evaluate(self, points: ArrayLike, k: int) -> tuple[FloatArray, FloatArray]:
        """Velocity (N, 3) and pressure (N,) of the k-th corrector."""
        offset, inner, annulus, hole = self._regions(points)
        eps = self.epsilon
        w = np.tile(unit_vector(k), (offset.shape[0], 1))
        q = np.zeros(offset.shape[0])
        if np.any(inner):
            y = offset[inner] / self.domain.hole_scale
            w[inner] = self.profile.velocity(y, k)
            q[inner] = self.profile.pressure(y, k) / eps**3
        if np.any(annulus):
            z = offset[annulus] / eps
            w[annulus] = self.annuli[k].velocity(z)
            q[annulus] = self.annuli[k].pressure(z) / eps
        w[hole] = 0.0
        q = q - self.pressure_shift[k]
        q[hole] = 0.0
        return w, q

    def velocity_gradient(self, points: ArrayLike, k: int) -> FloatArray:
        """G[n, i, j] = d w_i / d x_j."""
        offset, inner, annulus, _ = self._regions(points)
        eps = self.epsilon
        grad = np.zeros((offset.shape[0], 3, 3))
        if np.any(inner):
            grad[inner] = self.profile.gradient(offset[inner] / self.domain.hole_scale, k) / eps**3
        if np.any(annulus):
            grad[annulus] = self.annuli[k].gradient(offset[annulus] / eps) / eps
        return grad

    def pressure_gradient(self, points: ArrayLike, k: int) -> FloatArray:
        offset, inner, annulus, _ = self._regions(points)
        eps = self.epsilon
        grad = np.zeros((offset.shape[0], 3))
        if np.any(inner):
            grad[inner] = self.profile.pressure_gradient(offset[inner] / self.domain.hole_scale, k) / eps**6
        if np.any(annulus):
            grad[annulus] = self.annuli[k].pressure_gradient(offset[annulus] / eps) / eps**2
        return grad

    # Per-cell integrals in the scaled variables

    def inner_shell(self, r_inner: float | None = None, r_outer: float | None = None) -> Shell:
        """Inner region in the cell variable y, optionally restricted to r_inner < |y| < r_outer."""
        lo = self.profile.inner_radius if r_inner is None else max(r_inner, self.profile.inner_radius)
        hi = self.inner_limit if r_outer is None else min(r_outer, self.inner_limit)
        hi = max(hi, lo)
        return Shell(np.zeros(3), lo, hi, exclude=self.profile.exclude, name=f"inner(eps={self.epsilon:g})")

    def annulus_shell(self) -> Shell:
        return Shell(np.zeros(3), ANNULUS_INNER, ANNULUS_OUTER, name=f"annulus(eps={self.epsilon:g})")

    def cell_integrals(
        self,
        inner_integrand: Callable[[FloatArray], np.ndarray],
        annulus_integrand: Callable[[FloatArray], np.ndarray],
        inner_region: Shell | None = None,
        rel_tol: float | None = None,
    ) -> tuple[FloatArray, FloatArray]:
        """Unscaled integrals over the inner region (in y) and the annulus (in z)."""
        region = inner_region or self.inner_shell()
        # an indicator of a non-round obstacle limits the angular accuracy
        angular_tol = 1e-8 if region.exclude is None else 1e-3
        inner = np.asarray(
            region_quadrature(region, inner_integrand, rel_tol=rel_tol, angular_tol=angular_tol)
        )
        annulus = np.asarray(region_quadrature(self.annulus_shell(), annulus_integrand, rel_tol=rel_tol))
        return inner, annulus

    def interface_mismatch(self, k: int, samples: int = 100, seed: int = 0) -> dict[str, float]:
        """Max velocity jump across the hole boundary, |x - x_i| = eps/2 and |x - x_i| = eps."""
        rng = np.random.default_rng(seed)
        directions = rng.normal(size=(samples, 3))
        directions /= np.linalg.norm(directions, axis=1)[:, None]
        annulus = self.annuli[k]
        out = {}
        if self.profile.degenerate:
            out["hole"] = 0.0
        else:
            extent = self.profile.shape.radial_extent(directions)[:, None]
            out["hole"] = float(np.max(np.abs(self.profile.velocity(directions * extent * (1.0 + 1e-12), k))))
        inner = self.profile.velocity(directions * self.inner_limit, k)
        out["inner"] = float(np.max(np.abs(inner - annulus.velocity(ANNULUS_INNER * directions))))
        outer = annulus.velocity(ANNULUS_OUTER * directions)
        out["outer"] = float(np.max(np.abs(outer - unit_vector(k))))
        return out


def _pressure_shift(cf: CorrectorFamily) -> FloatArray:
    """Constants making q_k^eps mean zero over D."""
    shift = np.zeros(3)
    if cf.profile.odd_pressure or cf.n_holes == 0:
        return shift
    eps = cf.epsilon
    for k in range(3):
        inner, annulus = cf.cell_integrals(
            lambda y, k=k: cf.profile.pressure(y, k),
            lambda z, k=k: cf.annuli[k].pressure(z),
        )
        per_cell = eps**6 * float(inner) + eps**2 * float(annulus)
        shift[k] = cf.n_holes * per_cell / cf.domain.outer.volume()
    return shift


def assemble_correctors(
    pd: PerforatedDomain,
    source: CellProfile | CellSolution | None = None,
    samples: int = TRACE_SAMPLES,
) -> CorrectorFamily:
    profile = resolve_profile(pd.shape, source)
    annuli = [solve_annulus(profile, pd.epsilon, k, samples) for k in range(3)]
    cf = CorrectorFamily(domain=pd, profile=profile, annuli=annuli)
    cf.pressure_shift = _pressure_shift(cf)
    logger.info(
        f"Correctors at eps={pd.epsilon:g}: {pd.n_holes} cells, {profile!r}, "
        f"annulus trace mismatch {cf.trace_mismatch:.2e}"
    )
    return cf
