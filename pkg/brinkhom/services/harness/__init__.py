# rates first: the corrector package imports it while the study imports the correctors
from brinkhom.services.harness.rates import MIN_RATE_POINTS, RateFit, fit_rate  # isort: skip
from brinkhom.services.harness.bumps import (
    MAX_TEST_FIELDS,
    ConstantField,
    CurlBump,
    ScalarBump,
    divergence_free_family,
    octant_bumps,
)
from brinkhom.services.harness.checks import (
    BrinkmanResidual,
    SolenoidalityCheck,
    brinkman_residual,
    solenoidality_check,
)
from brinkhom.services.harness.study import (
    ConvergenceReport,
    DensityGap,
    EpsilonEntry,
    ReferenceSolution,
    StageFailure,
    SweepConfig,
    run_convergence_study,
    swirl,
)

__all__ = [
    "MIN_RATE_POINTS",
    "RateFit",
    "fit_rate",
    "MAX_TEST_FIELDS",
    "ConstantField",
    "CurlBump",
    "ScalarBump",
    "divergence_free_family",
    "octant_bumps",
    "BrinkmanResidual",
    "SolenoidalityCheck",
    "brinkman_residual",
    "solenoidality_check",
    "ConvergenceReport",
    "DensityGap",
    "EpsilonEntry",
    "ReferenceSolution",
    "StageFailure",
    "SweepConfig",
    "run_convergence_study",
    "swirl",
]
