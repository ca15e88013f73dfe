from brinkhom.schemas.common import BaseSchema, Matrix, StrictSchema, Vector
from brinkhom.schemas.config import (
    BogovskiiConfig,
    CellConfig,
    CompressibleConfig,
    CorrectorsConfig,
    GeometryConfig,
    HarnessConfig,
    ResistanceConfig,
    ResistanceSource,
    RunConfig,
    SolverConfig,
    Verbosity,
)
from brinkhom.schemas.reports import (
    BogovskiiSummary,
    CellSummary,
    ConvergenceSummary,
    DensityGapSummary,
    EnergySummary,
    EntrySummary,
    RateCheckSummary,
    RateReportSummary,
    ResistanceSummary,
    SolenoidalitySummary,
    SolveSummary,
    StageFailureSummary,
)

__all__ = [
    # Common
    "BaseSchema",
    "StrictSchema",
    "Matrix",
    "Vector",
    # Run configuration
    "RunConfig",
    "GeometryConfig",
    "CellConfig",
    "CorrectorsConfig",
    "ResistanceConfig",
    "SolverConfig",
    "CompressibleConfig",
    "HarnessConfig",
    "BogovskiiConfig",
    "ResistanceSource",
    "Verbosity",
    # Reports
    "CellSummary",
    "RateCheckSummary",
    "RateReportSummary",
    "ResistanceSummary",
    "EnergySummary",
    "SolenoidalitySummary",
    "DensityGapSummary",
    "EntrySummary",
    "StageFailureSummary",
    "ConvergenceSummary",
    "BogovskiiSummary",
    "SolveSummary",
]
