from brinkhom.services.correctors.family import (
    AnnulusSolution,
    AnnulusTable,
    CorrectorFamily,
    assemble_correctors,
    solve_annulus,
)
from brinkhom.services.correctors.functionals import (
    CellMoments,
    ScalarTestField,
    VectorTestField,
    WeakFunctionals,
    cell_moments,
    weak_convergence_functionals,
)
from brinkhom.services.correctors.norms import (
    QUANTITIES,
    CorrectorNorms,
    RateCheck,
    RateReport,
    corrector_norms,
    expected_exponent,
    verify_estimates,
)
from brinkhom.services.correctors.profiles import (
    CellProfile,
    NumericalCellProfile,
    SphereCellProfile,
    UniformCellProfile,
    resolve_profile,
)
from brinkhom.services.correctors.resistance import (
    ResistanceEstimate,
    cell_dissipation,
    compute_resistance,
)

__all__ = [
    "CellProfile",
    "SphereCellProfile",
    "NumericalCellProfile",
    "UniformCellProfile",
    "resolve_profile",
    "AnnulusSolution",
    "AnnulusTable",
    "CorrectorFamily",
    "assemble_correctors",
    "solve_annulus",
    "QUANTITIES",
    "CorrectorNorms",
    "RateCheck",
    "RateReport",
    "corrector_norms",
    "expected_exponent",
    "verify_estimates",
    "ResistanceEstimate",
    "cell_dissipation",
    "compute_resistance",
    "CellMoments",
    "ScalarTestField",
    "VectorTestField",
    "WeakFunctionals",
    "cell_moments",
    "weak_convergence_functionals",
]
