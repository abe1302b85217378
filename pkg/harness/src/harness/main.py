"""fredholm-colloc: solve, study convergence and inspect the B-spline / Heaviside collocation method."""

from __future__ import annotations

import argparse
import logging
import time
from collections.abc import Callable
from pathlib import Path

import numpy as np
import pandas as pd
import yaml
from fredholm.basis import BSplineBasis
from fredholm.colloc import (
    Discretization,
    Problem,
    Solution,
    assemble,
    away_from_jumps_error,
    measure_error,
    near_jump_error,
    solve,
    solve_problem,
    solve_without_enrichment,
)
from fredholm.context import Settings, SolverContext
from fredholm.contour import PRESETS, TWO_PI, Contour
from fredholm.errors import ConfigurationError, FredholmError, InsufficientDataError
from fredholm.interp import bh_project, lagrange_heaviside, spline_plain
from fredholm.piecewise import PiecewiseFn, error_grid, ph_norm_estimate
from fredholm.quadrature import trapezoid
from pydantic import ValidationError
from scipy.special import i0
from shared import ConvergenceRow, RunConfig, RunManifest

from .config import build_contour, build_discretization, build_problem, load_config
from .report import complex_columns, empirical_orders, format_elapsed, write_csv, write_manifest

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

QUADCHECK_N = [4, 8, 16, 32, 64, 128]
QUADCHECK_ORACLE_N = 4096
CONDITIONING_N = [16, 32, 64]

Artifacts = dict[str, pd.DataFrame | RunManifest]


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    p = argparse.ArgumentParser(prog="fredholm-colloc", description=__doc__)
    p.add_argument("--config", help="Problem file (JSON or YAML)")
    p.add_argument("--out", help="Output directory (default: FREDHOLM_OUT_DIR or ./out)")
    p.add_argument("--threads", type=int, help="Worker threads for matrix assembly")
    p.add_argument(
        "--collocation-rule",
        choices=["offset", "nodes"],
        help="Override the config's collocation rule; both give the same solution, only the row order differs",
    )
    p.add_argument(
        "--basis", choices=["spline", "lagrange"], help="Override the trial basis (lagrange needs n_B <= 64)"
    )
    p.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="Solve once and write the solution table and manifest")
    s.add_argument("--n-b", type=int, help="Override discretization.n_B")

    c = sub.add_parser("convergence", help="Solve for a list of n_B and report errors and orders")
    c.add_argument("--n-b-list", type=_int_list, help="Comma-separated n_B values, ascending")

    i = sub.add_parser("interp", help="Approximate the right-hand side alone")
    i.add_argument("--variant", choices=["spline", "lagrange", "plain"], default="spline")
    i.add_argument("--n-b", type=int, help="Override discretization.n_B")

    k = sub.add_parser("conditioning", help="Condition of the spline and Lagrange collocation matrices side by side")
    k.add_argument("--n-b-list", type=_int_list, default=CONDITIONING_N, help="Comma-separated n_B values")

    g = sub.add_parser("gibbs", help="Compare enriched and plain solves near the jumps")
    g.add_argument("--n-b", type=int, help="Override discretization.n_B")

    q = sub.add_parser("quad-check", help="Trapezoid error for exp(cos θ) on [0, 2π]")
    q.add_argument("--n-list", type=_int_list, default=QUADCHECK_N)

    b = sub.add_parser("basis", help="Tabulate every basis function on a θ grid")
    b.add_argument("--m", type=int, choices=[1, 2, 3, 4], default=4)
    b.add_argument("--n-b", type=int, default=8)
    b.add_argument("--samples", type=int, default=400, help="Grid points on (0, 2π]")
    b.add_argument("--contour", choices=sorted(PRESETS), default="circle", help="Preset when no --config is given")
    return p.parse_args(argv)


def _require(config: RunConfig | None, command: str) -> RunConfig:
    if config is None:
        raise ConfigurationError(f"'{command}' needs --config")
    return config


def _require_exact(problem: Problem, command: str) -> PiecewiseFn:
    if problem.exact_solution is None:
        raise ConfigurationError(f"'{command}' needs an 'exact_solution' block")
    return problem.exact_solution


def _error_metrics(sol: Solution, exact: PiecewiseFn, problem: Problem, config: RunConfig, disc: Discretization):
    report = measure_error(sol, exact.eval, problem.jumps, config.output.grid_size, 2 * disc.eps2)
    ph = ph_norm_estimate(
        lambda theta: np.asarray(sol(theta)) - np.asarray(exact.eval(theta)),
        problem.contour,
        problem.jumps.angles,
        alpha=config.output.alpha,
        P=config.output.P,
    )
    return {
        "max_grid_error": report.max_excluded,
        "max_grid_error_with_wrap": report.max_included,
        "ph_norm_error_estimate": ph.total,
    }


def _wrap_mismatch(f: PiecewiseFn) -> float | None:
    try:
        return abs(f.decompose().wrap_mismatch())
    except InsufficientDataError:
        return None


def _manifest(
    command: str,
    config: RunConfig,
    disc: Discretization,
    problem: Problem,
    sol: Solution,
    ctx: SolverContext,
    **metrics,
) -> RunManifest:
    return RunManifest(
        command=command,
        config_name=config.name,
        n_B=disc.n_B,
        m=disc.m,
        quad_N=disc.quad.N,
        oracle_N=disc.quad.oracle_N,
        eps2=disc.eps2,
        collocation_rule=disc.rule,
        basis=disc.basis,
        grid_size=config.output.grid_size,
        alpha=config.output.alpha,
        lam=(problem.lam.real, problem.lam.imag),
        kernel=problem.kernel.text,
        contour=problem.contour.name,
        residual_inf=sol.diagnostics.residual_inf,
        rhs_inf=sol.diagnostics.rhs_inf,
        condition_estimate_1norm=sol.diagnostics.condition_estimate_1norm,
        rcond=sol.diagnostics.rcond,
        residual_within_tolerance=sol.diagnostics.residual_within_tolerance,
        wrap_mismatch=_wrap_mismatch(problem.rhs),
        beta_coeffs=[(b.real, b.imag) for b in sol.beta],
        elapsed_seconds=round(ctx.trace.elapsed(), 3),
        stages=ctx.trace.to_list(),
        **metrics,
    )


def run_solve(args: argparse.Namespace, config: RunConfig | None, ctx: SolverContext) -> Artifacts:
    config = _require(config, "solve")
    disc = build_discretization(config, args.n_b, args.collocation_rule, args.basis)
    problem = build_problem(config, disc.n_B)
    sol = solve(assemble(problem, disc, ctx), ctx)

    theta = error_grid(config.output.grid_size, [], 0.0).theta
    phi = np.asarray(sol(theta))
    table = {"theta": theta}
    complex_columns(table, "phi", phi)
    metrics = {}
    if problem.exact_solution is not None:
        exact = np.asarray(problem.exact_solution.eval(theta))
        complex_columns(table, "exact", exact)
        table["abs_err"] = np.abs(phi - exact)
        metrics = _error_metrics(sol, problem.exact_solution, problem, config, disc)
        logger.info(
            "n_B=%d: max error %.3e (%.3e with wrap neighbourhood)",
            disc.n_B,
            metrics["max_grid_error"],
            metrics["max_grid_error_with_wrap"],
        )
    return {
        "solution.csv": pd.DataFrame(table),
        "manifest.json": _manifest("solve", config, disc, problem, sol, ctx, **metrics),
    }


def run_convergence(args: argparse.Namespace, config: RunConfig | None, ctx: SolverContext) -> Artifacts:
    config = _require(config, "convergence")
    n_list = args.n_b_list or config.convergence.n_B
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ConfigurationError(f"n_B list {n_list} must be strictly ascending")
    problem = build_problem(config, max(n_list))
    exact = _require_exact(problem, "convergence")

    rows = []
    for n_B in n_list:
        run_ctx = ctx.fresh()
        disc = build_discretization(config, n_B, args.collocation_rule, args.basis)
        try:
            sol = solve_problem(problem, disc, run_ctx)
        except FredholmError:
            logger.error("convergence run aborted at n_B=%d", n_B)
            raise
        metrics = _error_metrics(sol, exact, problem, config, disc)
        rows.append(
            ConvergenceRow(
                n_B=n_B,
                residual_inf=sol.diagnostics.residual_inf,
                residual_within_tolerance=sol.diagnostics.residual_within_tolerance,
                condition_estimate_1norm=sol.diagnostics.condition_estimate_1norm,
                rcond=sol.diagnostics.rcond,
                elapsed_seconds=round(run_ctx.trace.elapsed(), 3),
                **metrics,
            )
        )
        logger.info("n_B=%d: max error %.3e in %s", n_B, metrics["max_grid_error"], format_elapsed(run_ctx.trace.elapsed()))

    frame = pd.DataFrame([row.model_dump() for row in rows])
    if len(rows) > 1:
        frame["order"] = empirical_orders([r.n_B for r in rows], [r.max_grid_error for r in rows])
    return {"convergence.csv": frame}


def run_interp(args: argparse.Namespace, config: RunConfig | None, ctx: SolverContext) -> Artifacts:
    config = _require(config, "interp")
    disc = build_discretization(config, args.n_b, args.collocation_rule, args.basis)
    problem = build_problem(config, disc.n_B)
    f = problem.rhs
    with ctx.trace.stage("interp", variant=args.variant, n_B=disc.n_B):
        if args.variant == "lagrange":
            approx = lagrange_heaviside(f, disc.n_B)
        else:
            basis = BSplineBasis.build(problem.contour, disc.n_B, disc.m)
            approx = bh_project(f, basis, disc) if args.variant == "spline" else spline_plain(f, basis, disc)

    theta = error_grid(config.output.grid_size, [], 0.0).theta
    if not f.closed_form:
        theta = TWO_PI * np.arange(1, disc.n_B + 1) / disc.n_B
    values = np.asarray(f.eval(theta))
    approx_values = np.asarray(approx(theta))
    table = {"theta": theta}
    complex_columns(table, "f", values)
    complex_columns(table, "approx", approx_values)
    table["abs_err"] = np.abs(values - approx_values)
    logger.info("%s interpolation, n_B=%d: max error %.3e", args.variant, disc.n_B, float(table["abs_err"].max()))
    return {f"interp_{args.variant}.csv": pd.DataFrame(table)}


def run_gibbs(args: argparse.Namespace, config: RunConfig | None, ctx: SolverContext) -> Artifacts:
    config = _require(config, "gibbs")
    disc = build_discretization(config, args.n_b, args.collocation_rule, args.basis)
    problem = build_problem(config, disc.n_B)
    exact = _require_exact(problem, "gibbs")
    size = config.output.grid_size
    jump_sizes = exact.jump_sizes()
    beta1 = float(abs(jump_sizes[0])) if len(jump_sizes) else 0.0

    rows = []
    for variant, runner in (("enriched", solve_problem), ("plain", solve_without_enrichment)):
        sol = runner(problem, disc, ctx.fresh())
        report = measure_error(sol, exact.eval, problem.jumps, size, 2 * disc.eps2)
        near = [near_jump_error(sol, exact.eval, jump, size) for jump in problem.jumps]
        rows.append(
            {
                "variant": variant,
                "n_B": disc.n_B,
                "max_grid_error": report.max_excluded,
                "max_grid_error_with_wrap": report.max_included,
                "near_jump_error": max(near, default=0.0),
                "away_error": away_from_jumps_error(sol, exact.eval, problem.jumps, size),
                "beta1_abs": beta1,
            }
        )
        logger.info("%s: near-jump error %.3e, |beta_1| %.3e", variant, rows[-1]["near_jump_error"], beta1)
    return {"gibbs.csv": pd.DataFrame(rows)}


def run_conditioning(args: argparse.Namespace, config: RunConfig | None, ctx: SolverContext) -> Artifacts:
    config = _require(config, "conditioning")
    n_list = args.n_b_list
    problem = build_problem(config, max(n_list))
    rows = []
    for basis in ("spline", "lagrange"):
        for n_B in n_list:
            disc = build_discretization(config, n_B, args.collocation_rule, basis)
            sol = solve_problem(problem, disc, ctx.fresh())
            row = {
                "basis": basis,
                "n_B": n_B,
                "rcond": sol.diagnostics.rcond,
                "condition_estimate_1norm": sol.diagnostics.condition_estimate_1norm,
                "residual_inf": sol.diagnostics.residual_inf,
            }
            if problem.exact_solution is not None:
                report = measure_error(
                    sol, problem.exact_solution.eval, problem.jumps, config.output.grid_size, 2 * disc.eps2
                )
                row["max_grid_error"] = report.max_excluded
            rows.append(row)
            logger.info("%s basis, n_B=%d: rcond %.3e", basis, n_B, sol.diagnostics.rcond)
    return {"conditioning.csv": pd.DataFrame(rows)}


def run_quadcheck(args: argparse.Namespace, config: RunConfig | None, ctx: SolverContext) -> Artifacts:
    def g(theta):
        return np.exp(np.cos(theta))

    reference = TWO_PI * float(i0(1.0))
    oracle = trapezoid(g, 0.0, TWO_PI, QUADCHECK_ORACLE_N)
    rows = []
    for N in args.n_list:
        value = trapezoid(g, 0.0, TWO_PI, N)
        rows.append({"N": N, "abs_error": abs(value - reference), "abs_error_vs_oracle": abs(value - oracle)})
    return {"quad_check.csv": pd.DataFrame(rows)}


def run_basis_dump(args: argparse.Namespace, config: RunConfig | None, ctx: SolverContext) -> Artifacts:
    contour = build_contour(config) if config is not None else Contour.from_preset(args.contour)
    basis = BSplineBasis.build(contour, args.n_b, args.m)
    theta = error_grid(args.samples, [], 0.0).theta
    values = basis.eval_matrix(theta)
    frame = pd.DataFrame(
        {
            "k": np.repeat(np.arange(basis.n_B), len(theta)),
            "theta": np.tile(theta, basis.n_B),
            "re_value": values.T.ravel().real,
            "im_value": values.T.ravel().imag,
        }
    )
    return {f"basis_m{args.m}_n{args.n_b}.csv": frame}


COMMANDS: dict[str, Callable[[argparse.Namespace, RunConfig | None, SolverContext], Artifacts]] = {
    "solve": run_solve,
    "convergence": run_convergence,
    "interp": run_interp,
    "gibbs": run_gibbs,
    "conditioning": run_conditioning,
    "quad-check": run_quadcheck,
    "basis": run_basis_dump,
}


def write_artifacts(artifacts: Artifacts, out_dir: Path) -> list[Path]:
    written = []
    for name, artifact in artifacts.items():
        if isinstance(artifact, RunManifest):
            written.append(write_manifest(artifact, out_dir / name))
        else:
            written.append(write_csv(artifact, out_dir / name))
    return written


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    t0 = time.monotonic()
    try:
        settings = Settings(**({"threads": args.threads} if args.threads is not None else {}))
    except ValidationError as err:
        logging.basicConfig(format="%(asctime)s - %(levelname)s - %(message)s")
        logger.error("invalid settings: %s", err)
        return EXIT_CONFIG
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else settings.log_level.upper(),
        format="%(asctime)s - %(levelname)s - %(message)s",
    )
    out_dir = Path(args.out) if args.out else settings.out_dir

    try:
        config = load_config(args.config) if args.config else None
        with SolverContext.create(settings) as ctx:
            artifacts = COMMANDS[args.command](args, config, ctx)
        written = write_artifacts(artifacts, out_dir)
    except (ConfigurationError, ValidationError, OSError, yaml.YAMLError) as err:
        logger.error("configuration error: %s", err)
        return EXIT_CONFIG
    except FredholmError as err:
        logger.error("numerical failure: %s", err)
        return EXIT_NUMERICAL

    for path in written:
        logger.info("wrote %s", path)
    logger.info("%s finished in %s", args.command, format_elapsed(time.monotonic() - t0))
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
