"""
Weak-convergence functionals of the correctors.

w_k^eps - e_k and q_k^eps vanish outside the balls B_eps(x_i) (up to the pressure gauge), so
integrals against smooth test fields reduce to per-cell moments:

    int_D (w_k - e_k) . Phi  ~  sum_i  m0 . Phi(x_i) + m1 : grad Phi(x_i)

with m0 = int (w_k - e_k) and m1_ab = int (w_k - e_k)_a (x - x_i)_b over one cell. The
moments are computed once and shared by every cell.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from brinkhom.services.correctors.family import CorrectorFamily
from brinkhom.utils.helpers import FloatArray, unit_vector

logger = logging.getLogger(__name__)


class VectorTestField(Protocol):
    def value(self, points: FloatArray) -> FloatArray: ...  # (N, 3)

    def gradient(self, points: FloatArray) -> FloatArray: ...  # (N, 3, 3), [a, b] = d_b Phi_a


class ScalarTestField(Protocol):
    def value(self, points: FloatArray) -> FloatArray: ...  # (N,)

    def gradient(self, points: FloatArray) -> FloatArray: ...  # (N, 3)

    def integral(self) -> float: ...


@dataclass
class CellMoments:
    velocity0: FloatArray  # (3,)
    velocity1: FloatArray  # (3, 3)
    pressure0: float
    pressure1: FloatArray  # (3,)
    lp: dict[float, float]  # int |w - e_k|^p over one cell


@dataclass
class WeakFunctionals:
    epsilon: float
    n_holes: int
    velocity: FloatArray  # (3, J): int (w_k - e_k) . Phi_j
    pressure: FloatArray  # (3, J'): int q_k psi_j
    lp_norms: dict[float, FloatArray] = field(default_factory=dict)  # p -> ||w_k - e_k||_{L^p(D)}, shape (3,)


def cell_moments(cf: CorrectorFamily, k: int, p_list: Sequence[float] = (2.0,)) -> CellMoments:
    eps = cf.epsilon
    scale = cf.domain.hole_scale
    e = unit_vector(k)
    profile = cf.profile
    annulus = cf.annuli[k]
    powers = [float(p) for p in p_list]

    def columns(w: FloatArray, q: FloatArray, position: FloatArray) -> FloatArray:
        d = w - e
        mags = np.linalg.norm(d, axis=1)
        return np.column_stack(
            [d, np.einsum("na,nb->nab", d, position).reshape(-1, 9), q, q[:, None] * position]
            + [mags[:, None] ** p for p in powers]
        )

    inner, ann = cf.cell_integrals(
        lambda y: columns(profile.velocity(y, k), profile.pressure(y, k), y),
        lambda z: columns(annulus.velocity(z), annulus.pressure(z), z),
    )
    # inner: dx = eps^9 dy, x - x_i = eps^3 y, q = eps^-3 q(y); annulus: dx = eps^3 dz, x - x_i = eps z, q = Q/eps
    velocity0 = eps**9 * inner[0:3] + eps**3 * ann[0:3]
    velocity1 = (eps**12 * inner[3:12] + eps**4 * ann[3:12]).reshape(3, 3)
    pressure0 = float(eps**6 * inner[12] + eps**2 * ann[12])
    pressure1 = eps**9 * inner[13:16] + eps**3 * ann[13:16]

    hole = 0.0 if profile.degenerate else scale**3 * profile.shape.volume
    velocity0 = velocity0 - hole * e
    lp = {
        p: float(eps**9 * inner[16 + i] + eps**3 * ann[16 + i] + hole) for i, p in enumerate(powers)
    }
    return CellMoments(velocity0, velocity1, pressure0, pressure1, lp)


def weak_convergence_functionals(
    cf: CorrectorFamily,
    fields: Sequence[VectorTestField],
    scalars: Sequence[ScalarTestField] = (),
    p_list: Sequence[float] = (2.0,),
) -> WeakFunctionals:
    centers = cf.domain.centers
    velocity = np.zeros((3, len(fields)))
    pressure = np.zeros((3, len(scalars)))
    lp_norms = {float(p): np.zeros(3) for p in p_list}
    if cf.n_holes == 0:
        return WeakFunctionals(cf.epsilon, 0, velocity, pressure, lp_norms)

    values = [np.asarray(f.value(centers)) for f in fields]
    gradients = [np.asarray(f.gradient(centers)) for f in fields]
    scalar_values = [np.asarray(s.value(centers)) for s in scalars]
    scalar_gradients = [np.asarray(s.gradient(centers)) for s in scalars]

    for k in range(3):
        m = cell_moments(cf, k, p_list)
        for j in range(len(fields)):
            velocity[k, j] = float(np.sum(values[j] @ m.velocity0) + np.sum(gradients[j] * m.velocity1))
        for j, s in enumerate(scalars):
            pressure[k, j] = float(
                m.pressure0 * np.sum(scalar_values[j])
                + np.sum(scalar_gradients[j] @ m.pressure1)
                - cf.pressure_shift[k] * s.integral()
            )
        for p, per_cell in m.lp.items():
            lp_norms[p][k] = (cf.n_holes * per_cell) ** (1.0 / p)

    logger.debug(
        f"Weak functionals at eps={cf.epsilon:g}: max |velocity| {np.max(np.abs(velocity), initial=0.0):.3e}"
    )
    return WeakFunctionals(cf.epsilon, cf.n_holes, velocity, pressure, lp_norms)
