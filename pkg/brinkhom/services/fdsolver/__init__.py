from brinkhom.services.fdsolver.bogovskii import (
    BogovskiiSample,
    bogovskii_norm_ratio,
    bogovskii_sweep,
    centered_coordinate,
    discrete_bogovskii,
    sobolev_norm,
)
from brinkhom.services.fdsolver.compressible import (
    CompressibleParams,
    PseudoTimeControls,
    flatness,
    pressure_from_density,
    solve_compressible_steady,
)
from brinkhom.services.fdsolver.diagnostics import (
    EnergyCheck,
    ZeroExtension,
    energy_check,
    fluid_l2_norm_squared,
    remap_cells,
    zero_extend,
)
from brinkhom.services.fdsolver.grid import (
    MIN_CELLS_ACROSS_HOLE,
    StaggeredGrid,
    check_resolution,
    graded_edges,
    mask_holes,
    perforated_grid,
)
from brinkhom.services.fdsolver.manufactured import (
    ManufacturedSolution,
    RefinementStudy,
    observed_order,
    refinement_study,
)
from brinkhom.services.fdsolver.operators import MacOperators
from brinkhom.services.fdsolver.saddle import InnerSolver, SaddlePointSolver, SaddleResult
from brinkhom.services.fdsolver.state import (
    FlowMode,
    FlowState,
    Forcing,
    StressParams,
    sample_faces,
)
from brinkhom.services.fdsolver.stokes import (
    ChannelProfile,
    IncompressibleSystem,
    channel_oracle,
    solve_brinkman,
    solve_stokes_perforated,
)

__all__ = [
    "StaggeredGrid",
    "MIN_CELLS_ACROSS_HOLE",
    "graded_edges",
    "check_resolution",
    "mask_holes",
    "perforated_grid",
    "MacOperators",
    "InnerSolver",
    "SaddlePointSolver",
    "SaddleResult",
    "FlowMode",
    "FlowState",
    "Forcing",
    "StressParams",
    "sample_faces",
    "IncompressibleSystem",
    "solve_stokes_perforated",
    "solve_brinkman",
    "ChannelProfile",
    "channel_oracle",
    "CompressibleParams",
    "PseudoTimeControls",
    "pressure_from_density",
    "flatness",
    "solve_compressible_steady",
    "discrete_bogovskii",
    "bogovskii_norm_ratio",
    "bogovskii_sweep",
    "BogovskiiSample",
    "centered_coordinate",
    "sobolev_norm",
    "EnergyCheck",
    "ZeroExtension",
    "energy_check",
    "zero_extend",
    "fluid_l2_norm_squared",
    "remap_cells",
    "ManufacturedSolution",
    "RefinementStudy",
    "observed_order",
    "refinement_study",
]
