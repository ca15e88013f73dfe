"""
Subcommands. Each takes the resolved RunConfig and the output directory and returns the
exit code; failures propagate as HomogenizationError and are mapped by `execute`.

| command    | artifacts                                                    |
|------------|--------------------------------------------------------------|
| cell       | drag.csv, residuals.csv, report.json, w_k / q_k VTK fields   |
| correctors | correctors.csv, rates.csv, report.json                       |
| resistance | resistance.csv, report.json                                  |
| solve      | solution.csv, residuals.csv, report.json, u / p VTK fields   |
| converge   | report.csv, report.json                                      |
| bogovskii  | bogovskii.csv, report.json                                   |
"""

import logging
import sys
from collections.abc import Callable, Mapping
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from brinkhom.cli.config_file import load_run_config
from brinkhom.core.exceptions import EXIT_SOLVER_ERROR, HomogenizationError
from brinkhom.core.runlog import run_log, version_string
from brinkhom.schemas.config import ResistanceSource, RunConfig, Verbosity
from brinkhom.schemas.reports import (
    BogovskiiSummary,
    CellSummary,
    ConvergenceSummary,
    EnergySummary,
    RateCheckSummary,
    RateReportSummary,
    ResistanceSummary,
    SolveSummary,
)
from brinkhom.services.cellflow import CellSolution, drag_matrix, solve_cell_problem
from brinkhom.services.correctors import compute_resistance, verify_estimates
from brinkhom.services.fdsolver import (
    CompressibleParams,
    FlowMode,
    FlowState,
    Forcing,
    PseudoTimeControls,
    bogovskii_sweep,
    energy_check,
    perforated_grid,
    solve_brinkman,
    solve_compressible_steady,
    solve_stokes_perforated,
    zero_extend,
)
from brinkhom.services.geometry import HoleShape, OuterDomain, build_perforated_domain
from brinkhom.services.harness import SweepConfig, run_convergence_study, swirl
from brinkhom.utils.export import write_csv, write_json, write_rows, write_vtk_structured
from brinkhom.utils.helpers import FloatArray

logger = logging.getLogger(__name__)

EXIT_OK = 0

LOG_LEVELS = {Verbosity.QUIET: logging.WARNING, Verbosity.VERBOSE: logging.DEBUG}


def build_outer(config: RunConfig) -> OuterDomain:
    g = config.geometry
    if g.outer == "ball":
        return OuterDomain.ball(g.center, g.radius)
    return OuterDomain.box(g.lower, g.upper)


def build_shape(config: RunConfig) -> HoleShape:
    return HoleShape.from_params(config.geometry.shape, config.geometry.shape_params)


def build_forcing(config: RunConfig, outer: OuterDomain) -> tuple[Forcing, Forcing]:
    g = config.solver.g
    if g == "swirl":
        body: Forcing = swirl(outer)
    elif g == "zero":
        body = None
    else:
        body = tuple(g)
    return tuple(config.solver.f), body


def _cell_source(config: RunConfig, shape: HoleShape, force: bool = False) -> CellSolution | None:
    """A solved cell problem when requested or when no closed form exists for the shape."""
    if shape.is_ball and not force:
        return None
    c = config.cell
    return solve_cell_problem(shape, R=c.R, h=c.h, tol=c.tol, growth=c.growth)


def resistance_matrix(config: RunConfig, outer: OuterDomain, shape: HoleShape) -> FloatArray:
    if config.solver.resistance is not None:
        return np.asarray(config.solver.resistance, dtype=float)
    if config.solver.M == ResistanceSource.ZERO:
        return np.zeros((3, 3))
    estimate = compute_resistance(config.resistance.eps, _cell_source(config, shape), outer, shape)
    return 0.5 * (estimate.limit + estimate.limit.T)


def cmd_cell(config: RunConfig, out: Path) -> int:
    shape = build_shape(config)
    c = config.cell
    cs = solve_cell_problem(shape, R=c.R, h=c.h, tol=c.tol, growth=c.growth)
    drag = drag_matrix(cs)
    corrected = cs.corrected_drag()
    rows = [
        {"quantity": name, "i": i + 1, "k": k + 1, "value": float(matrix[i, k])}
        for name, matrix in (("drag", drag), ("drag_corrected", corrected))
        for i in range(3)
        for k in range(3)
    ]
    write_rows(rows, ["quantity", "i", "k", "value"], out / "drag.csv")
    residual_rows = [
        {"k": k + 1, "iter": it, "residual": r}
        for k, history in enumerate(cs.histories)
        for it, r in enumerate(history)
    ]
    write_rows(residual_rows, ["k", "iter", "residual"], out / "residuals.csv")
    if c.export_fields:
        cs.export_vtk(out)
    summary = CellSummary(
        shape=shape.kind.value,
        truncation_radius=cs.truncation_radius,
        h=cs.h,
        grid=list(cs.grid.shape),
        drag=drag,
        drag_corrected=corrected,
        iterations=cs.iterations,
        residuals=cs.residuals,
        max_divergence=cs.max_divergence(),
    )
    write_json({"version": version_string(), "cell": summary}, out / "report.json")
    logger.info("Drag matrix:\n" + np.array2string(drag, precision=6))
    return EXIT_OK


def cmd_correctors(config: RunConfig, out: Path) -> int:
    outer, shape = build_outer(config), build_shape(config)
    c = config.correctors
    report = verify_estimates(
        c.eps,
        p_list=c.p,
        source=_cell_source(config, shape, force=c.numerical_profile),
        outer=outer,
        shape=shape,
        directions=[k - 1 for k in c.directions],
        tol=c.rate_tol,
        max_workers=config.max_workers,
    )
    write_rows(report.norm_rows(), ["epsilon", "k", "p", "quantity", "value"], out / "correctors.csv")
    rates = report.rate_rows()
    write_rows(
        rates,
        ["quantity", "k", "p", "exponent", "slope", "passed", "close", "degenerate"],
        out / "rates.csv",
    )
    summary = RateReportSummary(
        eps_list=report.eps_list,
        checks=[RateCheckSummary.model_validate(r) for r in rates],
        warnings=report.warnings,
        degenerate=report.degenerate,
        all_passed=report.all_passed,
    )
    write_json({"version": version_string(), "rates": summary}, out / "report.json")
    logger.info(f"Corrector rates: {sum(r['passed'] for r in rates)}/{len(rates)} checks passed")
    return EXIT_OK


def cmd_resistance(config: RunConfig, out: Path) -> int:
    outer, shape = build_outer(config), build_shape(config)
    estimate = compute_resistance(config.resistance.eps, _cell_source(config, shape), outer, shape)
    write_rows(estimate.rows(), ["epsilon", "variant", "i", "k", "value"], out / "resistance.csv")
    write_json(
        {"version": version_string(), "resistance": ResistanceSummary.model_validate(estimate)},
        out / "report.json",
    )
    return EXIT_OK


def _solution_frame(state: FlowState) -> pd.DataFrame:
    ext = zero_extend(state)
    points = ext.grid.cell_points()
    velocity = ext.velocity.reshape(-1, 3)
    frame = pd.DataFrame(
        {
            "x": points[:, 0],
            "y": points[:, 1],
            "z": points[:, 2],
            "fluid": ext.fluid.ravel().astype(int),
            "u1": velocity[:, 0],
            "u2": velocity[:, 1],
            "u3": velocity[:, 2],
            "p": ext.p.ravel(),
        }
    )
    if ext.rho is not None:
        frame["rho"] = ext.rho.ravel()
    return frame


def cmd_solve(config: RunConfig, out: Path) -> int:
    outer, shape = build_outer(config), build_shape(config)
    s = config.solver
    mode = FlowMode(s.mode)
    f, g = build_forcing(config, outer)
    pd_eps = build_perforated_domain(outer, s.eps, shape)
    resistance = None

    if mode == FlowMode.COMPRESSIBLE:
        cp = config.compressible
        state = solve_compressible_steady(
            pd_eps,
            params=CompressibleParams(gamma=cp.gamma, beta=cp.beta, mass=cp.mass, mu=s.mu, eta=s.eta),
            f=f,
            g=g,
            controls=PseudoTimeControls(dt_max=cp.dt_max, tol=cp.steady_tol, max_steps=cp.max_steps),
            cells_per_diameter=s.cells_per_diameter,
        )
    elif mode == FlowMode.BRINKMAN:
        # same grid as the perforated solve, without the mask
        resistance = resistance_matrix(config, outer, shape)
        grid = perforated_grid(pd_eps, cells_per_diameter=s.cells_per_diameter)
        state = solve_brinkman(outer, grid, resistance, rho0=s.rho0, f=f, g=g, mu=s.mu, tol=s.tol)
    else:
        state = solve_stokes_perforated(
            pd_eps,
            f=f,
            g=g,
            mu=s.mu,
            eta=s.eta,
            tol=s.tol,
            rho0=s.rho0,
            convective=mode == FlowMode.NSE,
            cells_per_diameter=s.cells_per_diameter,
        )

    write_csv(_solution_frame(state), out / "solution.csv")
    write_rows(
        [{"iter": i, "residual": r} for i, r in enumerate(state.residual_history)],
        ["iter", "residual"],
        out / "residuals.csv",
    )
    if s.export_fields:
        axes = [state.grid.centers(a) for a in range(3)]
        ext = zero_extend(state)
        write_vtk_structured(out / "u.vtk", axes, vectors={"u": ext.velocity})
        write_vtk_structured(out / "p.vtk", axes, scalars={"p": ext.p})
        if ext.rho is not None:
            write_vtk_structured(out / "rho.vtk", axes, scalars={"rho": ext.rho})

    energy = energy_check(state)
    summary = SolveSummary(
        version=version_string(),
        mode=mode.value,
        epsilon=s.eps,
        n_holes=pd_eps.n_holes if mode != FlowMode.BRINKMAN else 0,
        iterations=state.iterations,
        residual=state.residual,
        max_divergence=state.max_divergence(),
        energy=EnergySummary.model_validate(energy),
        resistance=resistance,
        metadata={k: v for k, v in state.metadata.items() if isinstance(v, bool | int | float | str)},
    )
    write_json(summary, out / "report.json")
    if not energy.passed:
        logger.warning(f"Energy inequality violated: lhs {energy.lhs:.6e} > rhs {energy.rhs:.6e}")
    return EXIT_OK


def cmd_converge(config: RunConfig, out: Path) -> int:
    outer, shape = build_outer(config), build_shape(config)
    s, cp, h = config.solver, config.compressible, config.harness
    f, g = build_forcing(config, outer)
    sweep = SweepConfig(
        eps_list=h.eps,
        mode=FlowMode(s.mode),
        outer=outer,
        shape=shape,
        cells_per_diameter=s.cells_per_diameter,
        reference_cells=h.reference_cells,
        mu=s.mu,
        eta=s.eta,
        rho0=s.rho0,
        gamma=cp.gamma,
        beta=cp.beta,
        mass=cp.mass,
        f=f,
        g=g,
        test_fields=h.test_fields,
        tol=s.tol,
        max_workers=config.max_workers,
    )
    sweep.resistance = resistance_matrix(config, outer, shape)
    report = run_convergence_study(sweep, version=version_string())
    write_rows(report.rows(), ["epsilon", "metric", "value", "pass"], out / "report.csv")
    write_json(ConvergenceSummary.from_report(report), out / "report.json")
    if report.partial:
        logger.error(f"Convergence study is partial: {len(report.failures)} stage failures")
        return EXIT_SOLVER_ERROR
    if not report.passed:
        logger.warning("Convergence trends are not monotone over the eps list")
    return EXIT_OK


def cmd_bogovskii(config: RunConfig, out: Path) -> int:
    samples = bogovskii_sweep(
        config.bogovskii.eps,
        outer=build_outer(config),
        shape=build_shape(config),
        cells_per_diameter=config.solver.cells_per_diameter,
    )
    summaries = [BogovskiiSummary.model_validate(sample) for sample in samples]
    write_rows(
        [s.model_dump() for s in summaries],
        ["epsilon", "n_holes", "cells", "ratio", "max_defect", "linearity_gap"],
        out / "bogovskii.csv",
    )
    ratios = np.array([s.ratio for s in samples])
    variation = float((ratios.max() - ratios.min()) / ratios.max()) if ratios.max() > 0 else 0.0
    write_json(
        {"version": version_string(), "samples": summaries, "ratio_variation": variation},
        out / "report.json",
    )
    logger.info(f"Bogovskii norm ratio variation across eps: {variation:.1%}")
    return EXIT_OK


COMMANDS: dict[str, Callable[[RunConfig, Path], int]] = {
    "cell": cmd_cell,
    "correctors": cmd_correctors,
    "resistance": cmd_resistance,
    "solve": cmd_solve,
    "converge": cmd_converge,
    "bogovskii": cmd_bogovskii,
}


def execute(
    command: str,
    config_path: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> int:
    """Load the config, run one command inside its run log and map failures to exit codes."""
    try:
        config = load_run_config(config_path, overrides)
    except HomogenizationError as e:
        print(f"error: {e.detail}", file=sys.stderr)
        return e.exit_code

    if config.verbosity in LOG_LEVELS:
        logging.getLogger().setLevel(LOG_LEVELS[config.verbosity])
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(config.model_dump(mode="json"), out / "config.json")
    with run_log(out):
        logger.info(f"brinkhom {version_string()}: {command} -> {out}")
        try:
            code = COMMANDS[command](config, out)
        except HomogenizationError as e:
            logger.error(f"{type(e).__name__}: {e.detail}")
            print(f"error: {e.detail}", file=sys.stderr)
            return e.exit_code
        logger.info(f"{command} finished with exit code {code}")
    return code
