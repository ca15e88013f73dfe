"""
Convergence study of perforated flows towards the Brinkman limit.

For every eps the perforated problem is solved, its fields are extended by zero into the
holes and remapped conservatively (overlap-volume averages) onto the grid of one reference
Brinkman solve. Weak convergence is observed through a fixed finite family of linear
functionals plus the L^2 gap:

- L^2 gap ||u_eps - u_B|| and functional gaps |int (u_eps - u_B) . Phi_j|
- pressure functional gaps |int (p_eps - p_B) psi_j|
- compressible mode: ||rho_eps - rho_0||_{L^2 gamma} and its three contributions
  (volume removed by the holes, flatness of rho in D_eps, shift of the mean density)
- energy check and uniform-bound diagnostics of every perforated state

The study passes when the L^2 gap and every functional gap are non-increasing along the
whole eps list. A stage failure is recorded and the remaining eps values still run.
"""

import logging
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from brinkhom.config import settings
from brinkhom.core.exceptions import HomogenizationError, InvalidSweepError, RateFitError
from brinkhom.services.correctors.resistance import compute_resistance
from brinkhom.services.fdsolver import (
    CompressibleParams,
    EnergyCheck,
    FlowMode,
    FlowState,
    Forcing,
    StaggeredGrid,
    energy_check,
    flatness,
    remap_cells,
    solve_brinkman,
    solve_compressible_steady,
    solve_stokes_perforated,
    zero_extend,
)
from brinkhom.services.geometry import HoleShape, OuterDomain, build_perforated_domain
from brinkhom.services.harness.bumps import divergence_free_family, octant_bumps
from brinkhom.services.harness.checks import (
    BrinkmanResidual,
    SolenoidalityCheck,
    brinkman_residual,
    solenoidality_check,
)
from brinkhom.services.harness.rates import fit_rate
from brinkhom.utils.helpers import FloatArray
from brinkhom.utils.validators import is_strictly_decreasing

logger = logging.getLogger(__name__)

DEFAULT_RESISTANCE_EPS = (0.2, 0.1, 0.05)
CAUCHY_SCHWARZ_SLACK = 1e-9
TREND_SLACK = 1e-12


def swirl(outer: OuterDomain) -> Callable[[FloatArray], FloatArray]:
    """g = (-(y - c_y), x - c_x, 0): rotational, so not balanced by a pressure gradient."""
    lower, upper = outer.bounding_box()
    center = 0.5 * (lower + upper)

    def g(points: FloatArray) -> FloatArray:
        d = np.asarray(points, dtype=float).reshape(-1, 3) - center
        return np.column_stack((-d[:, 1], d[:, 0], np.zeros(d.shape[0])))

    return g


@dataclass
class SweepConfig:
    eps_list: list[float]
    mode: FlowMode = FlowMode.STOKES
    outer: OuterDomain = field(default_factory=OuterDomain.box)
    shape: HoleShape = field(default_factory=HoleShape.unit_ball)
    cells_per_diameter: int = 4
    reference_cells: int = 32  # per axis of the Brinkman grid
    mu: float = 1.0
    eta: float = 0.0
    rho0: float = 1.0  # incompressible density
    gamma: float = 3.0
    beta: float = 13.0
    mass: float | None = None  # compressible mass, |D| by default
    f: Forcing = (1.0, 0.0, 0.0)
    g: Forcing | str = "swirl"
    resistance: ArrayLike | None = None  # computed from the correctors when None
    test_fields: int = 8
    tol: float = 1e-8
    max_workers: int | None = None

    def __post_init__(self) -> None:
        self.eps_list = [float(e) for e in self.eps_list]
        if len(self.eps_list) < 2:
            raise InvalidSweepError(f"A sweep needs at least 2 eps values, got {len(self.eps_list)}")
        if not is_strictly_decreasing(self.eps_list):
            raise InvalidSweepError(f"eps list must be strictly decreasing, got {self.eps_list}")
        self.mode = FlowMode(self.mode)
        if self.mode == FlowMode.BRINKMAN:
            raise InvalidSweepError("The perforated mode must be stokes, nse or compressible")
        if self.mode == FlowMode.COMPRESSIBLE:
            self.compressible_params()

    def compressible_params(self) -> CompressibleParams:
        return CompressibleParams(gamma=self.gamma, beta=self.beta, mass=self.mass, mu=self.mu, eta=self.eta)

    def body_force(self) -> Forcing:
        return swirl(self.outer) if self.g == "swirl" else self.g  # type: ignore[return-value]

    @property
    def limit_density(self) -> float:
        """rho_0 = mass / |D| of the limit system."""
        if self.mode != FlowMode.COMPRESSIBLE:
            return self.rho0
        volume = self.outer.volume()
        return (self.mass if self.mass is not None else volume) / volume


@dataclass
class StageFailure:
    epsilon: float
    stage: str  # "reference", "solve" or "compare"
    detail: str


@dataclass
class DensityGap:
    total: float  # ||rho_eps - rho_0||_{L^2 gamma(D)}, zero extension
    removed_volume: float  # rho_0 |holes|^(1/2 gamma)
    flatness: float  # ||rho - <rho>||_{L^2 gamma(D_eps)}
    mean_shift: float  # |<rho> - rho_0| |D_eps|^(1/2 gamma)


@dataclass
class EpsilonEntry:
    epsilon: float
    n_holes: int
    degenerate: bool  # no interior cell: compared against the friction-free limit
    l2_gap: float
    functional_gaps: list[float]
    field_norms: list[float]  # discrete ||Phi_j||_{L^2}
    pressure_gaps: list[float]
    cauchy_schwarz: bool
    energy: EnergyCheck
    solenoidality: SolenoidalityCheck
    bounds: dict[str, float]
    density: DensityGap | None = None
    iterations: int = 0


@dataclass
class ReferenceSolution:
    state: FlowState
    resistance: FloatArray
    residual: BrinkmanResidual
    solenoidality: SolenoidalityCheck


@dataclass
class ConvergenceReport:
    config: SweepConfig
    rho0: float
    resistance: FloatArray
    reference: ReferenceSolution | None
    entries: list[EpsilonEntry] = field(default_factory=list)
    failures: list[StageFailure] = field(default_factory=list)
    trends: dict[str, bool] = field(default_factory=dict)
    l2_slope: float | None = None
    version: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.trends) and all(self.trends.values()) and not self.failures

    @property
    def partial(self) -> bool:
        return bool(self.failures)

    def rows(self) -> list[dict[str, Any]]:
        """Long format: epsilon, metric, value, pass."""
        rows: list[dict[str, Any]] = []

        def add(eps: float, metric: str, value: float, ok: bool | None = None) -> None:
            rows.append({"epsilon": eps, "metric": metric, "value": value, "pass": ok})

        for e in self.entries:
            add(e.epsilon, "n_holes", e.n_holes)
            add(e.epsilon, "degenerate", float(e.degenerate))
            add(e.epsilon, "l2_gap", e.l2_gap, self.trends.get("l2_gap"))
            for j, gap in enumerate(e.functional_gaps):
                add(e.epsilon, f"functional_gap_{j + 1}", gap, self.trends.get(f"functional_gap_{j + 1}"))
            for j, gap in enumerate(e.pressure_gaps):
                add(e.epsilon, f"pressure_gap_{j + 1}", gap)
            add(e.epsilon, "cauchy_schwarz", float(e.cauchy_schwarz), e.cauchy_schwarz)
            add(e.epsilon, "energy_lhs", e.energy.lhs)
            add(e.epsilon, "energy_rhs", e.energy.rhs, e.energy.passed)
            add(e.epsilon, "max_divergence", e.solenoidality.max_divergence, e.solenoidality.passed)
            for name, value in e.bounds.items():
                add(e.epsilon, name, value)
            if e.density is not None:
                add(e.epsilon, "density_gap", e.density.total, self.trends.get("density_gap"))
                add(e.epsilon, "density_removed_volume", e.density.removed_volume)
                add(e.epsilon, "density_flatness", e.density.flatness)
                add(e.epsilon, "density_mean_shift", e.density.mean_shift)
        add(0.0, "rho0", self.rho0)
        if self.l2_slope is not None:
            add(0.0, "l2_gap_slope", self.l2_slope)
        if self.reference is not None:
            add(0.0, "brinkman_residual", float(self.reference.residual.relative.max(initial=0.0)),
                self.reference.residual.passed)
            add(0.0, "brinkman_max_divergence", self.reference.solenoidality.max_divergence,
                self.reference.solenoidality.passed)
        return rows


def _reference_grid(cfg: SweepConfig) -> StaggeredGrid:
    lower, upper = cfg.outer.bounding_box()
    return StaggeredGrid.uniform(lower, upper, cfg.reference_cells)


def _solve_reference(cfg: SweepConfig, resistance: FloatArray, fields: list) -> ReferenceSolution:
    convective = cfg.mode != FlowMode.STOKES
    state = solve_brinkman(
        cfg.outer,
        _reference_grid(cfg),
        resistance,
        rho0=cfg.limit_density,
        f=cfg.f,
        g=cfg.body_force(),
        mu=cfg.mu,
        tol=cfg.tol,
        convective=convective,
    )
    residual = brinkman_residual(state, fields, tol=settings.picard_tol if convective else cfg.tol)
    div = solenoidality_check(state.grid, state.u, tol=max(cfg.tol, 1e-8))
    return ReferenceSolution(state=state, resistance=resistance, residual=residual, solenoidality=div)


def _solve_perforated(cfg: SweepConfig, epsilon: float) -> tuple[FlowState, int]:
    pd = build_perforated_domain(cfg.outer, epsilon, cfg.shape)
    if cfg.mode == FlowMode.COMPRESSIBLE:
        state = solve_compressible_steady(
            pd,
            params=cfg.compressible_params(),
            f=cfg.f,
            g=cfg.body_force(),
            cells_per_diameter=cfg.cells_per_diameter,
        )
    else:
        state = solve_stokes_perforated(
            pd,
            f=cfg.f,
            g=cfg.body_force(),
            mu=cfg.mu,
            eta=cfg.eta,
            tol=cfg.tol,
            rho0=cfg.rho0,
            convective=cfg.mode == FlowMode.NSE,
            cells_per_diameter=cfg.cells_per_diameter,
        )
    return state, pd.n_holes


def _density_gap(state: FlowState, outer: OuterDomain, rho0: float, gamma: float) -> DensityGap:
    grid = state.grid
    fluid = grid.fluid
    volumes = grid.cell_volumes
    q = 2.0 * gamma
    rho = np.where(fluid, state.rho, 0.0)
    inside = outer.contains(grid.cell_points()).reshape(grid.shape)
    holes = inside & ~fluid
    fluid_volume = float(np.sum(volumes[fluid]))
    mean = float(np.sum(volumes * rho) / fluid_volume)
    total = float(np.sum(np.where(inside, volumes * np.abs(rho - rho0) ** q, 0.0)) ** (1.0 / q))
    return DensityGap(
        total=total,
        removed_volume=rho0 * float(np.sum(volumes[holes])) ** (1.0 / q),
        flatness=flatness(state.rho, gamma, grid),
        mean_shift=abs(mean - rho0) * fluid_volume ** (1.0 / q),
    )


def _bounds(state: FlowState, cfg: SweepConfig, epsilon: float) -> dict[str, float]:
    ops = state.operators
    volumes = state.grid.cell_volumes
    fluid = state.grid.fluid
    out = {
        "grad_u_l2": float(np.sqrt(max(float(state.u @ (ops.stiffness @ state.u)), 0.0))),
        "pressure_l2": float(np.sqrt(np.sum(np.where(fluid, volumes * state.p**2, 0.0)))),
    }
    if state.rho is not None:
        q = 2.0 * cfg.gamma
        out["density_l2gamma"] = float(np.sum(np.where(fluid, volumes * state.rho**q, 0.0)) ** (1.0 / q))
        out["scaled_flatness"] = epsilon ** (-cfg.beta / cfg.gamma) * flatness(state.rho, cfg.gamma, state.grid)
    return out


def _compare(
    cfg: SweepConfig,
    epsilon: float,
    state: FlowState,
    n_holes: int,
    reference: FlowState,
    fields: list,
    scalars: list,
) -> EpsilonEntry:
    target = reference.grid
    ext = zero_extend(state)
    velocity = remap_cells(ext.grid, ext.velocity, target)
    pressure = remap_cells(ext.grid, ext.p, target)
    volumes = np.where(target.fluid, target.cell_volumes, 0.0)
    points = target.cell_points()

    gap = velocity - reference.cell_velocity()
    l2_gap = float(np.sqrt(np.sum(volumes * np.sum(gap**2, axis=-1))))
    flat_gap = gap.reshape(-1, 3)
    flat_volumes = volumes.ravel()
    functional_gaps, field_norms = [], []
    for phi in fields:
        values = phi.value(points)
        functional_gaps.append(abs(float(np.sum(flat_volumes * np.sum(flat_gap * values, axis=1)))))
        field_norms.append(float(np.sqrt(np.sum(flat_volumes * np.sum(values**2, axis=1)))))
    pressure_gap = (pressure - reference.p).ravel()
    pressure_gaps = [abs(float(np.sum(flat_volumes * pressure_gap * s.value(points)))) for s in scalars]
    cauchy_schwarz = all(
        g <= l2_gap * n * (1.0 + CAUCHY_SCHWARZ_SLACK) + 1e-300
        for g, n in zip(functional_gaps, field_norms, strict=True)
    )

    entry = EpsilonEntry(
        epsilon=epsilon,
        n_holes=n_holes,
        degenerate=n_holes == 0,
        l2_gap=l2_gap,
        functional_gaps=functional_gaps,
        field_norms=field_norms,
        pressure_gaps=pressure_gaps,
        cauchy_schwarz=cauchy_schwarz,
        energy=energy_check(state),
        solenoidality=solenoidality_check(ext.grid, ext.u, fluid=ext.fluid, tol=max(cfg.tol, 1e-8)),
        bounds=_bounds(state, cfg, epsilon),
        iterations=state.iterations,
    )
    if state.rho is not None:
        entry.density = _density_gap(state, cfg.outer, cfg.limit_density, cfg.gamma)
    if not cauchy_schwarz:
        logger.warning(f"eps={epsilon:g}: a functional gap exceeds the Cauchy-Schwarz bound")
    logger.info(
        f"eps={epsilon:g}: {n_holes} holes, L2 gap {l2_gap:.4e}, "
        f"max functional gap {max(functional_gaps, default=0.0):.4e}"
    )
    return entry


def _non_increasing(values: list[float]) -> bool:
    return all(b <= a * (1.0 + TREND_SLACK) + 1e-300 for a, b in zip(values[:-1], values[1:], strict=False))


def _resistance(cfg: SweepConfig) -> FloatArray:
    if cfg.resistance is not None:
        return np.asarray(cfg.resistance, dtype=float)
    estimate = compute_resistance(DEFAULT_RESISTANCE_EPS, outer=cfg.outer, shape=cfg.shape)
    return 0.5 * (estimate.limit + estimate.limit.T)


def run_convergence_study(cfg: SweepConfig, version: str = "") -> ConvergenceReport:
    logger.info(
        "Weak convergence is observed through finitely many fixed linear functionals "
        "and the L2 gap"
    )
    fields = divergence_free_family(cfg.outer, cfg.test_fields)
    scalars = octant_bumps(cfg.outer, cfg.test_fields)
    report = ConvergenceReport(
        config=cfg, rho0=cfg.limit_density, resistance=np.zeros((3, 3)), reference=None, version=version
    )
    try:
        report.resistance = _resistance(cfg)
        reference = _solve_reference(cfg, report.resistance, fields)
        report.reference = reference
    except HomogenizationError as e:
        report.failures.append(StageFailure(epsilon=0.0, stage="reference", detail=e.detail))
        logger.error(f"Reference Brinkman solve failed: {e.detail}")
        return report
    friction_free: FlowState | None = None

    def solve(epsilon: float) -> tuple[FlowState, int] | StageFailure:
        try:
            return _solve_perforated(cfg, epsilon)
        except HomogenizationError as e:
            logger.error(f"eps={epsilon:g}: solve failed: {e.detail}")
            return StageFailure(epsilon=epsilon, stage="solve", detail=e.detail)

    with ThreadPoolExecutor(max_workers=cfg.max_workers or settings.max_workers) as pool:
        outcomes = list(pool.map(solve, cfg.eps_list))

    for epsilon, outcome in zip(cfg.eps_list, outcomes, strict=True):
        if isinstance(outcome, StageFailure):
            report.failures.append(outcome)
            continue
        state, n_holes = outcome
        target = reference.state
        try:
            if n_holes == 0:
                logger.warning(f"eps={epsilon:g}: no interior cell; comparing against the friction-free limit")
                if friction_free is None:
                    friction_free = _solve_reference(cfg, np.zeros((3, 3)), fields).state
                target = friction_free
            report.entries.append(_compare(cfg, epsilon, state, n_holes, target, fields, scalars))
        except HomogenizationError as e:
            report.failures.append(StageFailure(epsilon=epsilon, stage="compare", detail=e.detail))

    entries = [e for e in report.entries if not e.degenerate]
    if len(entries) >= 2:
        report.trends["l2_gap"] = _non_increasing([e.l2_gap for e in entries])
        for j in range(len(fields)):
            report.trends[f"functional_gap_{j + 1}"] = _non_increasing([e.functional_gaps[j] for e in entries])
        if cfg.mode == FlowMode.COMPRESSIBLE:
            report.trends["density_gap"] = _non_increasing([e.density.total for e in entries if e.density])
    if len(entries) >= 3:
        try:
            report.l2_slope = fit_rate([e.epsilon for e in entries], [e.l2_gap for e in entries], "l2_gap").slope
        except RateFitError as e:
            logger.warning(e.detail)
    logger.info(f"Convergence study: {len(report.entries)} entries, passed={report.passed}")
    return report
