"""
Grid-convergence experiment for the B-spline solver and the noisy
comparison against the truncated Fourier series
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from superres.config import settings
from superres.core.generators import random_spline
from superres.core.grid_spline import (
    GridProblem,
    SplineSpec,
    build_grid,
    innovation_knots,
    prolong,
    reconstruct,
    solve_grid,
    truncated_fourier,
)
from superres.core.measures import TWO_PI, ObservationVector
from superres.utils.exceptions import SOLVER_ERRORS, InvalidInput
from superres.utils.validation import validate_p_list, validate_positive_int, validate_positive_real

logger = structlog.get_logger(__name__)

MONOTONE_SLACK = 1.10


@dataclass(frozen=True)
class ConvergenceRow:
    p: int
    mean_linf_error: float
    std_linf_error: float
    runs: int


@dataclass
class ConvergenceResult:
    rows: List[ConvergenceRow]
    slope: float
    violations: Dict[int, int] = field(default_factory=dict)
    failed_cells: List[Tuple[int, int]] = field(default_factory=list)


def evaluation_points(n: int = settings.EVAL_POINTS) -> np.ndarray:
    return TWO_PI * np.arange(n) / n


def _solve_and_measure(
    spec: SplineSpec, kc: int, lam: float, p: int, init: Optional[np.ndarray] = None
) -> Tuple[float, np.ndarray]:
    grid = build_grid(p, spec.m, kc)
    sol = solve_grid(GridProblem(spec.fourier(kc), lam, grid), init=init)
    t = evaluation_points()
    return float(np.max(np.abs(reconstruct(sol, grid, t) - spec.evaluate(t)))), sol.c


def linf_error(spec: SplineSpec, kc: int, lam: float, p: int, init: Optional[np.ndarray] = None) -> float:
    """Solve from the noiseless data of spec on a P-knot grid; sup error on the evaluation grid"""
    return _solve_and_measure(spec, kc, lam, p, init)[0]


def _run_sweep(args) -> Tuple[int, List[float]]:
    """Errors of one run over ascending P, each solve warm-started from the
    prolonged solution on the grid of half its size when there is one"""
    run, p_list, spec, kc, lam = args
    errors: List[float] = []
    prev_p, prev_c = None, None
    for p in p_list:
        init = prolong(prev_c, spec.m) if prev_c is not None and p == 2 * prev_p else None
        try:
            err, c = _solve_and_measure(spec, kc, lam, p, init)
        except SOLVER_ERRORS as e:
            logger.warning("convergence_cell_failed", run=run, p=p, stage=e.stage, error=e.message)
            err, c = float("nan"), None
        errors.append(err)
        prev_p, prev_c = p, c
    return run, errors


def fit_loglog_slope(rows: Iterable[ConvergenceRow]) -> float:
    """Least-squares slope of log(error) against log(P)"""
    pts = [(r.p, r.mean_linf_error) for r in rows if np.isfinite(r.mean_linf_error) and r.mean_linf_error > 0]
    if len(pts) < 2:
        return float("nan")
    p, err = np.array(pts, dtype=float).T
    return float(np.polyfit(np.log(p), np.log(err), 1)[0])


def monotonicity_violations(errors: Sequence[float], slack: float = MONOTONE_SLACK) -> int:
    """Steps where the error grows by more than the slack factor as P increases"""
    e = np.asarray(errors, dtype=float)
    ok = np.isfinite(e[:-1]) & np.isfinite(e[1:])
    return int(np.sum(e[1:][ok] > slack * e[:-1][ok]))


def convergence_experiment(
    kc: int,
    m: int,
    lam: float = 1e-7,
    p_list: Sequence[int] = (16, 32, 64, 128, 256, 512),
    runs: int = 20,
    n_knots: int = 2,
    seed: int = settings.SEED,
    ground_truth: Optional[SplineSpec] = None,
    workers: int = settings.BENCH_WORKERS,
) -> ConvergenceResult:
    """Mean L∞ error of the grid reconstruction against the ground truth per grid size.

    Each run draws one ground truth from a generator seeded by (seed, run)
    and sweeps the grid sizes in ascending order; runs are independent, so
    they may be spread over worker processes.
    Failed cells are reported as missing.
    """
    if m < 2:
        raise InvalidInput("uniform convergence requires m >= 2", "m")
    validate_positive_real(lam, "lambda")
    runs = validate_positive_int(runs, "runs")
    p_list = sorted(validate_p_list(p_list, m))

    specs = []
    for run in range(runs):
        if ground_truth is not None:
            specs.append(ground_truth)
        else:
            specs.append(random_spline(np.random.default_rng([seed, run]), n_knots, m))
    sweeps = [(run, p_list, specs[run], kc, lam) for run in range(runs)]

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_sweep, sweeps))
    else:
        results = [_run_sweep(sweep) for sweep in sweeps]

    errors = {(run, p): err for run, errs in results for p, err in zip(p_list, errs)}
    failed = [(run, p) for (run, p), err in errors.items() if not np.isfinite(err)]

    rows = []
    for p in p_list:
        values = np.array([errors[(run, p)] for run in range(runs)])
        values = values[np.isfinite(values)]
        if values.size:
            rows.append(ConvergenceRow(p, float(values.mean()), float(values.std()), int(values.size)))
        else:
            rows.append(ConvergenceRow(p, float("nan"), float("nan"), 0))

    violations = {}
    for run in range(runs):
        count = monotonicity_violations([errors[(run, p)] for p in p_list])
        violations[run] = count
        if count:
            logger.info("convergence_not_monotone", run=run, violations=count)

    slope = fit_loglog_slope(rows)
    logger.info("convergence_experiment_done", kc=kc, m=m, runs=runs, slope=slope, failed=len(failed))
    return ConvergenceResult(rows=rows, slope=slope, violations=violations, failed_cells=failed)


@dataclass(frozen=True)
class NoisyComparison:
    grid_sup_error: float
    grid_rms_error: float
    fourier_sup_error: float
    fourier_rms_error: float
    knots: int


def noisy_comparison(
    m: int = 1,
    n_knots: int = 7,
    kc: int = 20,
    sigma: float = 1e-3,
    lam: float = 1e-2,
    p: int = 256,
    seed: int = settings.SEED,
) -> NoisyComparison:
    """Grid solver against the truncated Fourier series on noisy data of a random spline"""
    rng = np.random.default_rng(seed)
    spec = random_spline(rng, n_knots, m)
    clean = spec.fourier(kc).coeffs
    noise = sigma * (rng.standard_normal(kc + 1) + 1j * rng.standard_normal(kc + 1))
    noise[0] = noise[0].real
    y = ObservationVector(clean + noise)

    grid = build_grid(p, m, kc)
    sol = solve_grid(GridProblem(y, lam, grid))
    t = evaluation_points()
    truth = spec.evaluate(t)
    grid_err = reconstruct(sol, grid, t) - truth
    fourier_err = truncated_fourier(y, t) - truth
    return NoisyComparison(
        grid_sup_error=float(np.max(np.abs(grid_err))),
        grid_rms_error=float(np.sqrt(np.mean(grid_err ** 2))),
        fourier_sup_error=float(np.max(np.abs(fourier_err))),
        fourier_rms_error=float(np.sqrt(np.mean(fourier_err ** 2))),
        knots=int(innovation_knots(sol, grid).size),
    )
