"""
Degree-one axisymmetric Stokes fields in closed form.

Every field has the form  u = f(r) c + h(r) (c.x) x,  P = pi(r) (c.x)  for a constant vector
c, and the four exact Stokes solutions of this form are

    mode        f        h         pi
    uniform     1        0         0
    quadratic   2 r^2    -1        10
    Stokeslet   1/r      1/r^3     2/r^3
    dipole      1/r^3    -3/r^5    0

A ModalField is a sum of the four modes with one coefficient vector per mode. The flow
past a sphere, the Stokeslet far field of any obstacle and every Stokes flow in a
spherical shell with boundary data of the form  a + (b.n) n  belong to this family.
"""

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from brinkhom.core.exceptions import DomainError, InvalidParameterError
from brinkhom.services.geometry import Shell, region_quadrature
from brinkhom.utils.helpers import FloatArray, as_points, unit_vector

logger = logging.getLogger(__name__)

MODE_COUNT = 4
UNIFORM, QUADRATIC, STOKESLET, DIPOLE = range(MODE_COUNT)

# Force exerted on the fluid by a Stokeslet of unit coefficient: u = F/(8 pi) (I/r + xx/r^3)
STOKESLET_FORCE = 8.0 * np.pi


def _profiles(r: FloatArray) -> dict[str, FloatArray]:
    """Radial profiles of the four modes and their derivatives, each of shape (4, N)."""
    one = np.ones_like(r)
    zero = np.zeros_like(r)
    inv = 1.0 / r
    return {
        "f": np.stack((one, 2.0 * r**2, inv, inv**3)),
        "df": np.stack((zero, 4.0 * r, -(inv**2), -3.0 * inv**4)),
        "h": np.stack((zero, -one, inv**3, -3.0 * inv**5)),
        "dh": np.stack((zero, zero, -3.0 * inv**4, 15.0 * inv**6)),
        "pi": np.stack((zero, 10.0 * one, 2.0 * inv**3, zero)),
        "dpi": np.stack((zero, zero, -6.0 * inv**4, zero)),
    }


@dataclass(frozen=True, eq=False)
class ModalField:
    coefficients: FloatArray  # (4, 3): coefficient vector of each mode

    def __post_init__(self) -> None:
        c = np.asarray(self.coefficients, dtype=float)
        if c.shape != (MODE_COUNT, 3):
            raise InvalidParameterError(f"Modal coefficients must have shape (4, 3), got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    # Constructors

    @classmethod
    def uniform(cls, direction: ArrayLike) -> "ModalField":
        c = np.zeros((MODE_COUNT, 3))
        c[UNIFORM] = direction
        return cls(c)

    @classmethod
    def sphere(cls, direction: ArrayLike, radius: float = 1.0) -> "ModalField":
        """Uniform flow `direction` past the ball of `radius` at the origin."""
        e = np.asarray(direction, dtype=float)
        c = np.zeros((MODE_COUNT, 3))
        c[UNIFORM] = e
        c[STOKESLET] = -0.75 * radius * e
        c[DIPOLE] = -0.25 * radius**3 * e
        return cls(c)

    @classmethod
    def far_field(cls, drag: ArrayLike, k: int) -> "ModalField":
        """e_k plus the Stokeslet carrying the force of column k of the drag matrix."""
        c = np.zeros((MODE_COUNT, 3))
        c[UNIFORM] = unit_vector(k)
        c[STOKESLET] = -np.asarray(drag, dtype=float)[:, k] / STOKESLET_FORCE
        return cls(c)

    def __add__(self, other: "ModalField") -> "ModalField":
        return ModalField(self.coefficients + other.coefficients)

    def scaled(self, factor: float) -> "ModalField":
        return ModalField(factor * self.coefficients)

    # Evaluation

    def _prepare(self, points: ArrayLike) -> tuple[FloatArray, FloatArray, FloatArray, bool]:
        x, single = as_points(points)
        r = np.linalg.norm(x, axis=1)
        if np.any(r == 0.0) and np.any(self.coefficients[STOKESLET:] != 0.0):
            raise DomainError("Singular modes cannot be evaluated at the origin")
        cx = x @ self.coefficients.T  # (N, 4): c_m . x
        return x, r, cx, single

    def velocity(self, points: ArrayLike) -> FloatArray:
        x, r, cx, single = self._prepare(points)
        p = _profiles(np.where(r > 0, r, 1.0))
        u = p["f"].T @ self.coefficients + np.sum(p["h"].T * cx, axis=1)[:, None] * x
        return u[0] if single else u

    def gradient(self, points: ArrayLike) -> FloatArray:
        """G[..., i, j] = d u_i / d x_j."""
        x, r, cx, single = self._prepare(points)
        safe = np.where(r > 0, r, 1.0)
        p = _profiles(safe)
        n = x / safe[:, None]
        c = self.coefficients
        # f'(r) n_j c_i
        grad = np.einsum("mn,mi,nj->nij", p["df"], c, n)
        # h'(r) n_j (c.x) x_i
        grad += np.einsum("mn,nm,ni,nj->nij", p["dh"], cx, x, n)
        # h(r) (c_j x_i + (c.x) delta_ij)
        grad += np.einsum("mn,mj,ni->nij", p["h"], c, x)
        grad += np.einsum("mn,nm->n", p["h"], cx)[:, None, None] * np.eye(3)
        return grad[0] if single else grad

    def pressure(self, points: ArrayLike) -> FloatArray:
        _, r, cx, single = self._prepare(points)
        p = _profiles(np.where(r > 0, r, 1.0))
        q = np.sum(p["pi"].T * cx, axis=1)
        return q[0] if single else q

    def pressure_gradient(self, points: ArrayLike) -> FloatArray:
        x, r, cx, single = self._prepare(points)
        safe = np.where(r > 0, r, 1.0)
        p = _profiles(safe)
        n = x / safe[:, None]
        g = p["pi"].T @ self.coefficients + np.sum(p["dpi"].T * cx, axis=1)[:, None] * n
        return g[0] if single else g

    def divergence(self, points: ArrayLike) -> FloatArray:
        g = np.asarray(self.gradient(points)).reshape(-1, 3, 3)
        return np.trace(g, axis1=1, axis2=2)

    def net_force(self) -> FloatArray:
        """Force on the fluid through any sphere around the origin; only the Stokeslet carries one."""
        return STOKESLET_FORCE * self.coefficients[STOKESLET]


def trace_matrix(radius: float) -> FloatArray:
    """
    Rows mapping mode coefficients to the trace a + (b.n) n on the sphere of `radius`:
    a = sum f_m c_m,  b = sum r^2 h_m c_m.
    """
    p = _profiles(np.array([radius]))
    return np.vstack((p["f"][:, 0], radius**2 * p["h"][:, 0]))


@dataclass
class TraceProjection:
    uniform: FloatArray  # a
    radial: FloatArray  # b
    residual: float  # max |v - (a + (b.n) n)| over the samples


def project_trace(directions: FloatArray, values: FloatArray) -> TraceProjection:
    """Least-squares fit of sampled values v(n) on a sphere by a + (b.n) n."""
    n = np.asarray(directions, dtype=float).reshape(-1, 3)
    v = np.asarray(values, dtype=float).reshape(-1, 3)
    design = np.zeros((3 * n.shape[0], 6))
    for i in range(3):
        design[i::3, i] = 1.0
        design[i::3, 3:] = n * n[:, i : i + 1]
    solution, *_ = np.linalg.lstsq(design, v.ravel(), rcond=None)
    a, b = solution[:3], solution[3:]
    fit = a + (n @ b)[:, None] * n
    return TraceProjection(uniform=a, radial=b, residual=float(np.max(np.abs(v - fit))))


def shell_solution(
    r_inner: float,
    r_outer: float,
    inner: tuple[ArrayLike, ArrayLike],
    outer: tuple[ArrayLike, ArrayLike],
) -> ModalField:
    """Exact Stokes flow in r_inner < r < r_outer with traces a + (b.n) n on both spheres."""
    if not 0.0 < r_inner < r_outer:
        raise InvalidParameterError(f"Shell radii must satisfy 0 < {r_inner} < {r_outer}")
    matrix = np.vstack((trace_matrix(r_inner), trace_matrix(r_outer)))
    rhs = np.vstack(
        [np.asarray(v, dtype=float) for v in (inner[0], inner[1], outer[0], outer[1])]
    )
    return ModalField(np.linalg.solve(matrix, rhs))


def truncated_sphere_field(R: float, k: int = 0, radius: float = 1.0) -> ModalField:
    """Flow around the ball of `radius` inside B_R with w = 0 on the ball and w = e_k on |x| = R."""
    zero = np.zeros(3)
    return shell_solution(radius, R, (zero, zero), (unit_vector(k), zero))


def truncated_sphere_drag(R: float, radius: float = 1.0) -> float:
    """Dissipation of the truncated flow, equal to the force on the ball."""
    if R <= radius:
        raise InvalidParameterError(f"Truncation radius {R} must exceed the ball radius {radius}")
    return float(-truncated_sphere_field(R, 0, radius).net_force()[0])


def wall_factor(lam: float) -> float:
    """Drag of the unit ball in a container of radius 1/lam relative to 6 pi."""
    if not 0.0 <= lam < 1.0:
        raise InvalidParameterError(f"Radius ratio must lie in [0, 1), got {lam}")
    if lam == 0.0:
        return 1.0
    return truncated_sphere_drag(1.0 / lam) / (6.0 * np.pi)


def container_wall_factor(lam: float) -> float:
    """Closed-form drag correction of a sphere in a concentric spherical container."""
    return (1.0 - lam**5) / (1.0 - 2.25 * lam + 2.5 * lam**3 - 2.25 * lam**5 + lam**6)


def dissipation(field: ModalField, r_inner: float, r_outer: float, order: int | None = None) -> float:
    """Quadrature of |grad u|^2 over the shell r_inner < r < r_outer."""

    def integrand(points: FloatArray) -> FloatArray:
        g = field.gradient(points).reshape(-1, 3, 3)
        return np.sum(g * g, axis=(1, 2))

    return float(region_quadrature(Shell(np.zeros(3), r_inner, r_outer, name="modal"), integrand, order))
