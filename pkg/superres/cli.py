"""
Command-line front end: generate, classify, solve, grid-solve, bench-convergence
"""
import argparse
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np
import structlog
from pydantic import BaseModel, ValidationError

import superres
from superres.config import settings
from superres.core import generators
from superres.core.bpc import GridLpConfig, solve_bpc
from superres.core.convergence import convergence_experiment, evaluation_points
from superres.core.grid_spline import GridProblem, build_grid, innovation_knots, reconstruct, solve_grid
from superres.core.measures import forward_measure
from superres.core.toeplitz import Regime, build_toeplitz, classify_regime
from superres.schemas.measures import AtomSpecSchema, MeasureSchema, ObservationSchema
from superres.schemas.reports import (
    ConvergenceSummarySchema,
    GridSolutionSchema,
    ReconstructionSchema,
    RegimeReportSchema,
    RunManifest,
    SolutionReportSchema,
)
from superres.utils.exceptions import SOLVER_ERRORS, InvalidInput
from superres.utils.io import load_model, write_csv, write_json
from superres.utils.logging import configure_logging

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NOT_UNIQUE = 10
EXIT_SOLVER = 20

PRESETS = {"alternating_comb", "footnote8"}

DEFINITE = (Regime.POSITIVE_DEFINITE, Regime.NEGATIVE_DEFINITE)


class GeneratedSchema(BaseModel):
    measure: MeasureSchema
    observation: ObservationSchema


def _tolerances() -> dict:
    return {k: float(v) for k, v in settings.model_dump().items() if k.endswith("_TOL")}


def _manifest(args: argparse.Namespace, inputs: List[str] = (), outputs: List[str] = ()) -> RunManifest:
    return RunManifest(
        command=args.command,
        seed=getattr(args, "seed", settings.SEED),
        inputs=[str(p) for p in inputs if p],
        outputs=[str(p) for p in outputs if p],
        tolerances=_tolerances(),
        version=superres.__version__,
    )


def _parse_p_list(text: str) -> List[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise InvalidInput(f"--p-list must be comma-separated integers, got {text!r}", "p_list")


def cmd_generate(args: argparse.Namespace) -> int:
    rng = np.random.default_rng(args.seed)
    if args.preset in PRESETS:
        w = generators.alternating_comb(args.kc)
    elif args.atoms is not None:
        try:
            w = AtomSpecSchema(text=args.atoms).to_measure()
        except ValidationError as e:
            raise InvalidInput(e.errors()[0]["msg"], "atoms")
    elif args.random_nonneg is not None:
        w = generators.random_nonnegative(rng, args.random_nonneg, args.kc)
    elif args.random_signed is not None:
        w = generators.random_signed(rng, args.random_signed, args.kc)
    else:
        raise InvalidInput("one of --preset, --atoms, --random-nonneg, --random-signed is required", "spec")

    y = forward_measure(w, args.kc)
    measure, observation = MeasureSchema.from_measure(w), ObservationSchema.from_observation(y)
    manifest = _manifest(args, outputs=[args.measure_out, args.y_out])
    if args.measure_out is None and args.y_out is None:
        write_json(GeneratedSchema(measure=measure, observation=observation), manifest)
    else:
        if args.measure_out:
            write_json(measure, manifest, args.measure_out)
        if args.y_out:
            write_json(observation, manifest, args.y_out)
    return EXIT_OK


def cmd_classify(args: argparse.Namespace) -> int:
    y = load_model(args.y_file, ObservationSchema).to_observation()
    report = classify_regime(build_toeplitz(y))
    write_json(RegimeReportSchema.from_report(report), _manifest(args, inputs=[args.y_file]), args.out)
    return EXIT_NOT_UNIQUE if report.regime in DEFINITE else EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    y = load_model(args.y_file, ObservationSchema).to_observation()
    lp_config = GridLpConfig(n_grid=args.n_grid) if args.n_grid else None
    report = solve_bpc(y, certify=args.certify, oracle=args.oracle, lp_config=lp_config)
    write_json(SolutionReportSchema.from_report(report), _manifest(args, inputs=[args.y_file]), args.out)
    return EXIT_OK if report.kind.is_unique else EXIT_NOT_UNIQUE


def cmd_grid_solve(args: argparse.Namespace) -> int:
    y = load_model(args.y_file, ObservationSchema).to_observation()
    grid = build_grid(args.p, args.m, y.kc)
    sol = solve_grid(GridProblem(y, args.lam, grid), trace=args.trace is not None)
    t = evaluation_points(args.points)
    manifest = _manifest(args, inputs=[args.y_file], outputs=[args.out, args.trace])
    payload = GridSolutionSchema(
        p=grid.p,
        m=grid.m,
        kc=grid.kc,
        lam=args.lam,
        c=sol.c.tolist(),
        innovation=sol.innovation.tolist(),
        knots=innovation_knots(sol, grid).tolist(),
        objective=sol.objective,
        iterations=sol.iterations,
        mean=sol.mean,
        reconstruction=ReconstructionSchema(t=t.tolist(), f=reconstruct(sol, grid, t).tolist()),
    )
    write_json(payload, manifest, args.out)
    if args.trace is not None:
        write_csv(("iter", "objective", "primal_res", "dual_res"), sol.trace, args.trace, manifest)
    return EXIT_OK


def cmd_bench_convergence(args: argparse.Namespace) -> int:
    result = convergence_experiment(
        kc=args.kc,
        m=args.m,
        lam=args.lam,
        p_list=_parse_p_list(args.p_list),
        runs=args.runs,
        n_knots=args.n_knots,
        seed=args.seed,
        workers=args.workers,
    )
    summary_path = f"{args.out}.summary.json" if args.out else None
    manifest = _manifest(args, outputs=[args.out, summary_path])
    rows = [(r.p, r.mean_linf_error, r.std_linf_error, r.runs, result.slope) for r in result.rows]
    write_csv(("P", "mean_linf_error", "std_linf_error", "runs", "slope"), rows, args.out, manifest)
    if args.out:
        write_json(ConvergenceSummarySchema.from_result(result), manifest, summary_path)
    logger.info("convergence_slope", slope=result.slope, failed=len(result.failed_cells))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="superres", description="TV-minimal super-resolution toolkit")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="Diagnostic log level (stderr)")
    parser.add_argument("--json-logs", action="store_true", default=settings.LOG_JSON, help="Render logs as JSON")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="Synthetic measure and its observations")
    spec = gen.add_mutually_exclusive_group(required=True)
    spec.add_argument("--preset", choices=sorted(PRESETS))
    spec.add_argument("--atoms", help="Explicit atoms 'x:a,x:a,...'")
    spec.add_argument("--random-nonneg", type=int, metavar="K")
    spec.add_argument("--random-signed", type=int, metavar="K")
    gen.add_argument("--kc", type=int, required=True)
    gen.add_argument("--seed", type=int, default=settings.SEED)
    gen.add_argument("--measure-out", type=Path)
    gen.add_argument("--y-out", type=Path)
    gen.set_defaults(handler=cmd_generate)

    cls = sub.add_parser("classify", help="Regime of the solution set")
    cls.add_argument("y_file", type=Path)
    cls.add_argument("--out", type=Path)
    cls.set_defaults(handler=cmd_classify)

    solve = sub.add_parser("solve", help="Solve the TV minimization problem")
    solve.add_argument("y_file", type=Path)
    solve.add_argument("--certify", action="store_true", help="Attach certificate verification diagnostics")
    solve.add_argument("--oracle", action="store_true", help="Also run the grid LP oracle")
    solve.add_argument("--n-grid", type=int, help="Oracle grid size (default 512*(kc+1))")
    solve.add_argument("--out", type=Path)
    solve.set_defaults(handler=cmd_solve)

    grid = sub.add_parser("grid-solve", help="B-spline grid solver for the D^M problem")
    grid.add_argument("y_file", type=Path)
    grid.add_argument("--m", type=int, required=True)
    grid.add_argument("--p", type=int, required=True)
    grid.add_argument("--lambda", dest="lam", type=float, required=True)
    grid.add_argument("--points", type=int, default=settings.EVAL_POINTS, help="Reconstruction samples")
    grid.add_argument("--trace", type=Path, help="Per-iteration CSV")
    grid.add_argument("--out", type=Path)
    grid.set_defaults(handler=cmd_grid_solve)

    bench = sub.add_parser("bench-convergence", help="Grid-convergence experiment")
    bench.add_argument("--m", type=int, default=2)
    bench.add_argument("--kc", type=int, default=3)
    bench.add_argument("--lambda", dest="lam", type=float, default=1e-7)
    bench.add_argument("--p-list", default="16,32,64,128,256,512")
    bench.add_argument("--runs", type=int, default=20)
    bench.add_argument("--n-knots", type=int, default=2)
    bench.add_argument("--seed", type=int, default=settings.SEED)
    bench.add_argument("--workers", type=int, default=settings.BENCH_WORKERS)
    bench.add_argument("--out", type=Path, help="CSV path (stdout when omitted)")
    bench.set_defaults(handler=cmd_bench_convergence)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level, args.json_logs)
    try:
        if getattr(args, "seed", 0) < 0:
            raise InvalidInput("seed must be nonnegative", "seed")
        return args.handler(args)
    except InvalidInput as e:
        logger.error("invalid_input", stage=e.stage, error=e.message)
        return EXIT_INVALID
    except SOLVER_ERRORS as e:
        logger.error("solver_failure", kind=type(e).__name__, stage=e.stage, error=e.message)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
