from brinkhom.services.cellflow.modal import (
    ModalField,
    TraceProjection,
    container_wall_factor,
    dissipation,
    project_trace,
    shell_solution,
    truncated_sphere_drag,
    truncated_sphere_field,
    wall_factor,
)
from brinkhom.services.cellflow.solver import (
    CellSolution,
    analytic_sphere_solution,
    cell_grid,
    drag_from_fields,
    drag_matrix,
    solve_cell_problem,
    uniform_faces,
)

__all__ = [
    "ModalField",
    "TraceProjection",
    "project_trace",
    "shell_solution",
    "truncated_sphere_field",
    "truncated_sphere_drag",
    "wall_factor",
    "container_wall_factor",
    "dissipation",
    "CellSolution",
    "analytic_sphere_solution",
    "cell_grid",
    "drag_from_fields",
    "drag_matrix",
    "solve_cell_problem",
    "uniform_faces",
]
