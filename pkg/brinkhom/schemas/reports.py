"""Serialized summaries of the numerical reports (report.json and friends)."""

from typing import Any

from brinkhom.schemas.common import BaseSchema, Matrix, Vector


class CellSummary(BaseSchema):
    shape: str
    truncation_radius: float
    h: float
    grid: list[int]
    drag: Matrix
    drag_corrected: Matrix
    iterations: list[int]
    residuals: list[float]
    max_divergence: float


class RateCheckSummary(BaseSchema):
    quantity: str
    k: int
    p: float
    exponent: float
    slope: float | None = None
    passed: bool
    close: bool
    degenerate: bool


class RateReportSummary(BaseSchema):
    eps_list: list[float]
    checks: list[RateCheckSummary]
    warnings: list[str]
    degenerate: bool
    all_passed: bool


class ResistanceSummary(BaseSchema):
    eps_list: list[float]
    limit: Matrix
    spread: float
    converged: bool
    symmetric: list[bool]
    positive_semidefinite: list[bool]
    warnings: list[str]


class EnergySummary(BaseSchema):
    lhs: float
    rhs: float
    transport: float
    passed: bool


class SolenoidalitySummary(BaseSchema):
    max_divergence: float
    near_mask_divergence: float
    near_mask_cells: int
    passed: bool


class DensityGapSummary(BaseSchema):
    total: float
    removed_volume: float
    flatness: float
    mean_shift: float


class EntrySummary(BaseSchema):
    epsilon: float
    n_holes: int
    degenerate: bool
    l2_gap: float
    functional_gaps: list[float]
    field_norms: list[float]
    pressure_gaps: list[float]
    cauchy_schwarz: bool
    energy: EnergySummary
    solenoidality: SolenoidalitySummary
    bounds: dict[str, float]
    density: DensityGapSummary | None = None
    iterations: int


class StageFailureSummary(BaseSchema):
    epsilon: float
    stage: str
    detail: str


class ConvergenceSummary(BaseSchema):
    version: str
    mode: str
    eps_list: list[float]
    rho0: float
    resistance: Matrix
    brinkman_residual: Vector
    brinkman_passed: bool | None = None
    entries: list[EntrySummary]
    failures: list[StageFailureSummary]
    trends: dict[str, bool]
    l2_slope: float | None = None
    passed: bool
    partial: bool

    @classmethod
    def from_report(cls, report: Any) -> "ConvergenceSummary":
        reference = report.reference
        return cls(
            version=report.version,
            mode=report.config.mode.value,
            eps_list=report.config.eps_list,
            rho0=report.rho0,
            resistance=report.resistance,
            brinkman_residual=[] if reference is None else reference.residual.relative,
            brinkman_passed=None if reference is None else reference.residual.passed,
            entries=[EntrySummary.model_validate(e) for e in report.entries],
            failures=[StageFailureSummary.model_validate(f) for f in report.failures],
            trends=report.trends,
            l2_slope=report.l2_slope,
            passed=report.passed,
            partial=report.partial,
        )


class BogovskiiSummary(BaseSchema):
    epsilon: float
    n_holes: int
    cells: int
    ratio: float
    max_defect: float
    linearity_gap: float


class SolveSummary(BaseSchema):
    version: str
    mode: str
    epsilon: float
    n_holes: int
    iterations: int
    residual: float
    max_divergence: float
    energy: EnergySummary
    resistance: Matrix | None = None
    metadata: dict[str, Any]
