"""
Semi-analytic corrector norms and their scaling rates in eps.

Every norm is |K_eps| times one per-cell integral over the inner region (cell variable y)
and the annulus (variable z), plus the pressure gauge constant on the rest of D. For a
power p the inner region scales with eps^(9 - 3p) (eps^(9 - 6p) for the pressure gradient)
and the annulus with eps^(3 - p).

Expected exponents r of ||.|| ~ eps^r:
- grad_w, pressure (L^p over D):   3 (2/p - 1)
- grad_q_inner (L^p over inner):   6 (1/p - 1)
- far_grad_w, far_pressure (L^2 over eps/4 < |x - x_i| < eps):  1
"""

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from brinkhom.config import settings
from brinkhom.core.exceptions import InvalidParameterError, InvalidSweepError, RateFitError
from brinkhom.services.cellflow import CellSolution
from brinkhom.services.correctors.family import CorrectorFamily, assemble_correctors
from brinkhom.services.correctors.profiles import CellProfile
from brinkhom.services.geometry import HoleShape, OuterDomain, build_perforated_domain
from brinkhom.services.harness.rates import fit_rate
from brinkhom.utils.helpers import FloatArray
from brinkhom.utils.validators import is_geometric

logger = logging.getLogger(__name__)

MIN_POWER = 1.5
RATE_TOL = 0.3
NORM_REL_TOL = 1e-8

QUANTITIES = ("grad_w", "pressure", "grad_q_inner", "far_grad_w", "far_pressure")
FAR_QUANTITIES = ("far_grad_w", "far_pressure")


def expected_exponent(quantity: str, p: float) -> float:
    if quantity in ("grad_w", "pressure"):
        return 3.0 * (2.0 / p - 1.0)
    if quantity == "grad_q_inner":
        return 6.0 * (1.0 / p - 1.0)
    if quantity in FAR_QUANTITIES:
        return 1.0
    raise InvalidParameterError(f"Unknown corrector quantity '{quantity}'")


@dataclass
class CorrectorNorms:
    epsilon: float
    k: int
    p: float
    n_holes: int
    grad_w: float  # ||grad w_k||_{L^p(D)}
    pressure: float  # ||q_k||_{L^p(D)}
    grad_q_inner: float  # ||grad q_k||_{L^p} over the inner regions
    far_grad_w: float  # ||grad w_k||_{L^2} over the far shells eps/4 < |x - x_i| < eps
    far_pressure: float
    split: dict[str, float] = field(default_factory=dict)  # p-th powers per region

    def value(self, quantity: str) -> float:
        return float(getattr(self, quantity))


def _frobenius(g: FloatArray) -> FloatArray:
    return np.sqrt(np.sum(np.asarray(g).reshape(-1, 3, 3) ** 2, axis=(1, 2)))


def corrector_norms(cf: CorrectorFamily, p: float, k: int = 0, rel_tol: float = NORM_REL_TOL) -> CorrectorNorms:
    if not p > MIN_POWER:
        raise InvalidParameterError(f"Corrector estimates need p > 3/2, got {p}")
    eps = cf.epsilon
    count = cf.n_holes
    profile = cf.profile
    annulus = cf.annuli[k]
    c = float(cf.pressure_shift[k])

    def inner_integrand(y: FloatArray) -> FloatArray:
        return np.column_stack(
            (
                _frobenius(profile.gradient(y, k)) ** p,
                np.abs(profile.pressure(y, k) - eps**3 * c) ** p,
                np.linalg.norm(profile.pressure_gradient(y, k), axis=1) ** p,
            )
        )

    def far_integrand(y: FloatArray) -> FloatArray:
        return np.column_stack(
            (
                _frobenius(profile.gradient(y, k)) ** 2,
                (profile.pressure(y, k) - eps**3 * c) ** 2,
            )
        )

    def annulus_integrand(z: FloatArray) -> FloatArray:
        grad = _frobenius(annulus.gradient(z))
        q = np.abs(annulus.pressure(z) - eps * c)
        return np.column_stack((grad**p, q**p, grad**2, q**2))

    inner, ann = cf.cell_integrals(inner_integrand, annulus_integrand, rel_tol=rel_tol)
    far_region = cf.inner_shell(r_inner=0.25 / eps**2)
    far, _ = cf.cell_integrals(far_integrand, lambda z: np.zeros((z.shape[0], 1)), far_region, rel_tol)

    inner_scale = eps ** (9.0 - 3.0 * p)
    annulus_scale = eps ** (3.0 - p)
    split = {
        "grad_w_inner": count * inner_scale * float(inner[0]),
        "grad_w_annulus": count * annulus_scale * float(ann[0]),
        "pressure_inner": count * inner_scale * float(inner[1]),
        "pressure_annulus": count * annulus_scale * float(ann[1]),
    }
    rest = cf.domain.outer.volume() - count * 4.0 / 3.0 * np.pi * eps**3
    split["pressure_rest"] = abs(c) ** p * max(rest, 0.0)

    grad_w = (split["grad_w_inner"] + split["grad_w_annulus"]) ** (1.0 / p)
    pressure = (split["pressure_inner"] + split["pressure_annulus"] + split["pressure_rest"]) ** (1.0 / p)
    grad_q_inner = (count * eps ** (9.0 - 6.0 * p) * float(inner[2])) ** (1.0 / p)
    far_grad_w = np.sqrt(count * (eps**3 * float(far[0]) + eps * float(ann[2])))
    far_pressure = np.sqrt(count * (eps**3 * float(far[1]) + eps * float(ann[3])))

    return CorrectorNorms(
        epsilon=eps,
        k=k,
        p=float(p),
        n_holes=count,
        grad_w=float(grad_w),
        pressure=float(pressure),
        grad_q_inner=float(grad_q_inner),
        far_grad_w=float(far_grad_w),
        far_pressure=float(far_pressure),
        split=split,
    )


@dataclass
class RateCheck:
    quantity: str
    k: int
    p: float
    exponent: float
    slope: float | None
    passed: bool  # slope >= exponent - tol, or |slope| <= tol for bounded quantities
    close: bool  # |slope - exponent| <= tol
    degenerate: bool  # every value zero, no slope defined


@dataclass
class RateReport:
    eps_list: list[float]
    norms: list[CorrectorNorms]
    checks: list[RateCheck]
    warnings: list[str] = field(default_factory=list)

    @property
    def degenerate(self) -> bool:
        return bool(self.checks) and all(c.degenerate for c in self.checks)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def norm_rows(self) -> list[dict]:
        return [
            {"epsilon": n.epsilon, "k": n.k + 1, "p": n.p, "quantity": q, "value": n.value(q)}
            for n in self.norms
            for q in QUANTITIES
        ]

    def rate_rows(self) -> list[dict]:
        return [
            {
                "quantity": c.quantity,
                "k": c.k + 1,
                "p": c.p,
                "exponent": c.exponent,
                "slope": c.slope,
                "passed": c.passed,
                "close": c.close,
                "degenerate": c.degenerate,
            }
            for c in self.checks
        ]


def _check(quantity: str, k: int, p: float, eps: list[float], values: list[float], tol: float) -> RateCheck:
    exponent = expected_exponent(quantity, p)
    if all(v == 0.0 for v in values):
        return RateCheck(quantity, k, p, exponent, None, passed=False, close=False, degenerate=True)
    try:
        slope = fit_rate(eps, values, quantity=f"{quantity}(k={k + 1}, p={p:g})").slope
    except RateFitError as e:
        logger.warning(e.detail)
        return RateCheck(quantity, k, p, exponent, None, passed=False, close=False, degenerate=False)
    passed = abs(slope) <= tol if exponent == 0.0 else slope >= exponent - tol
    return RateCheck(
        quantity, k, p, exponent, slope, passed=bool(passed), close=abs(slope - exponent) <= tol, degenerate=False
    )


def verify_estimates(
    eps_list: Sequence[float],
    p_list: Sequence[float] = (2.0, 3.0),
    source: CellProfile | CellSolution | None = None,
    outer: OuterDomain | None = None,
    shape: HoleShape | None = None,
    directions: Sequence[int] = (0,),
    tol: float = RATE_TOL,
    max_workers: int | None = None,
) -> RateReport:
    eps = sorted((float(e) for e in eps_list), reverse=True)
    if len(eps) < 3:
        raise InvalidSweepError(f"Rate verification needs at least 3 eps values, got {len(eps)}")
    for p in p_list:
        if not p > MIN_POWER:
            raise InvalidParameterError(f"Corrector estimates need p > 3/2, got {p}")
    warnings = []
    if not is_geometric(eps):
        warnings.append(f"eps list {eps} is not geometrically spaced")
        logger.warning(warnings[-1])

    outer = outer or OuterDomain.box()
    families = [assemble_correctors(build_perforated_domain(outer, e, shape), source) for e in eps]
    tasks = [(i, k, p) for i in range(len(eps)) for k in directions for p in p_list]
    with ThreadPoolExecutor(max_workers=max_workers or settings.max_workers) as pool:
        norms = list(pool.map(lambda t: corrector_norms(families[t[0]], t[2], t[1]), tasks))
    table = {(n.epsilon, n.k, n.p): n for n in norms}

    checks = []
    for k in directions:
        for p in p_list:
            for quantity in QUANTITIES:
                if quantity in FAR_QUANTITIES and p != p_list[0]:
                    continue
                values = [table[(e, k, float(p))].value(quantity) for e in eps]
                checks.append(_check(quantity, k, float(p), eps, values, tol))

    for c in checks:
        if not c.passed and not c.degenerate:
            logger.warning(
                f"{c.quantity} (k={c.k + 1}, p={c.p:g}): slope {c.slope} against exponent {c.exponent:g}"
            )
    report = RateReport(eps_list=eps, norms=norms, checks=checks, warnings=warnings)
    if report.degenerate:
        report.warnings.append("Degenerate corrector family: every norm vanishes")
    return report
