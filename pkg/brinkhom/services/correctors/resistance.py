"""
Resistance matrix M_ik = lim  int_D grad w_i^eps : grad w_k^eps  with constant weight.

Two normalizations are reported per eps:
- raw:          (1/|D|) int_D grad w_i : grad w_k
- cell density: the same integral per unit volume of the perforated core,
                weight 1/(|K_eps| (2 eps)^3)
The raw matrices carry the fraction of D covered by interior cells, which oscillates with
eps; the limit is extrapolated from the cell-density sequence in eps^2.
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from brinkhom.core.exceptions import InvalidSweepError
from brinkhom.services.cellflow import CellSolution
from brinkhom.services.correctors.family import CorrectorFamily, assemble_correctors
from brinkhom.services.correctors.profiles import CellProfile
from brinkhom.services.geometry import HoleShape, OuterDomain, build_perforated_domain
from brinkhom.utils.helpers import FloatArray
from brinkhom.utils.validators import is_positive_semidefinite, is_symmetric

logger = logging.getLogger(__name__)

SPREAD_LIMIT = 0.2
RESISTANCE_REL_TOL = 1e-9


@dataclass
class ResistanceEstimate:
    eps_list: list[float]
    raw: list[FloatArray]
    cell_density: list[FloatArray]
    limit: FloatArray
    spread: float  # max over diagonal entries of (max - min) / |mean| of the cell-density sequence
    symmetric: list[bool] = field(default_factory=list)
    positive_semidefinite: list[bool] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.spread <= SPREAD_LIMIT

    def rows(self) -> list[dict]:
        out = []
        for eps, raw, density in zip(self.eps_list, self.raw, self.cell_density, strict=True):
            for variant, matrix in (("raw", raw), ("cell_density", density)):
                out.extend(
                    {"epsilon": eps, "variant": variant, "i": i + 1, "k": k + 1, "value": float(matrix[i, k])}
                    for i in range(3)
                    for k in range(3)
                )
        out.extend(
            {"epsilon": 0.0, "variant": "limit", "i": i + 1, "k": k + 1, "value": float(self.limit[i, k])}
            for i in range(3)
            for k in range(3)
        )
        return out


def cell_dissipation(cf: CorrectorFamily, rel_tol: float = RESISTANCE_REL_TOL) -> FloatArray:
    """int over one interior cell of grad w_i^eps : grad w_k^eps, as a 3x3 matrix."""
    profile = cf.profile

    def pairs(gradients: list[FloatArray]) -> FloatArray:
        g = np.stack([np.asarray(x).reshape(-1, 3, 3) for x in gradients], axis=1)
        return np.einsum("nkab,nlab->nkl", g, g).reshape(-1, 9)

    inner, annulus = cf.cell_integrals(
        lambda y: pairs([profile.gradient(y, k) for k in range(3)]),
        lambda z: pairs([cf.annuli[k].gradient(z) for k in range(3)]),
        rel_tol=rel_tol,
    )
    eps = cf.epsilon
    matrix = (eps**3 * inner + eps * annulus).reshape(3, 3)
    return 0.5 * (matrix + matrix.T)


def _extrapolate(eps: list[float], matrices: list[FloatArray]) -> FloatArray:
    """Least-squares fit M(eps) = M0 + c eps^2 per entry; M0 is returned."""
    if len(eps) == 1:
        return matrices[0].copy()
    design = np.column_stack((np.ones(len(eps)), np.asarray(eps) ** 2))
    values = np.stack([m.ravel() for m in matrices])
    coefficients, *_ = np.linalg.lstsq(design, values, rcond=None)
    return coefficients[0].reshape(3, 3)


def compute_resistance(
    eps_list: Sequence[float],
    source: CellProfile | CellSolution | None = None,
    outer: OuterDomain | None = None,
    shape: HoleShape | None = None,
) -> ResistanceEstimate:
    eps = sorted((float(e) for e in eps_list), reverse=True)
    if not eps:
        raise InvalidSweepError("Resistance needs at least one eps value")
    outer = outer or OuterDomain.box()
    volume = outer.volume()

    raw, density, symmetric, psd, warnings = [], [], [], [], []
    for e in eps:
        pd = build_perforated_domain(outer, e, shape)
        if pd.n_holes == 0:
            raise InvalidSweepError(f"No interior cell fits in the domain at eps={e:g}")
        per_cell = cell_dissipation(assemble_correctors(pd, source))
        raw.append(pd.n_holes * per_cell / volume)
        density.append(per_cell / pd.cell_volume)
        symmetric.append(is_symmetric(per_cell))
        psd.append(is_positive_semidefinite(per_cell))
        if not (symmetric[-1] and psd[-1]):
            warnings.append(f"Resistance matrix at eps={e:g} is not symmetric positive semidefinite")
            logger.warning(warnings[-1])
        logger.info(f"Resistance at eps={e:g}: diag {np.diag(density[-1]).round(6).tolist()} per unit volume")

    diagonals = np.stack([np.diag(m) for m in density])
    mean = np.abs(diagonals.mean(axis=0))
    spread = float(np.max((diagonals.max(axis=0) - diagonals.min(axis=0)) / np.where(mean > 0, mean, 1.0)))
    if spread > SPREAD_LIMIT:
        warnings.append(f"Resistance sequence spread {spread:.1%} exceeds {SPREAD_LIMIT:.0%}")
        logger.warning(warnings[-1])

    limit = _extrapolate(eps, density)
    logger.info("Extrapolated resistance matrix:\n" + np.array2string(limit, precision=6))
    return ResistanceEstimate(
        eps_list=eps,
        raw=raw,
        cell_density=density,
        limit=limit,
        spread=spread,
        symmetric=symmetric,
        positive_semidefinite=psd,
        warnings=warnings,
    )
