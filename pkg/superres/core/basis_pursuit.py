"""
Basis pursuit over an equispaced grid of candidate atoms: the sampled
Fourier dictionary, an ADMM solver and the HiGHS linear-programming oracle
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
import structlog
from scipy.optimize import linprog

from superres.config import settings
from superres.core.measures import TWO_PI, ObservationVector
from superres.utils.exceptions import ConvergenceFailure
from superres.utils.validation import validate_positive_int

logger = structlog.get_logger(__name__)


def soft_threshold(v: np.ndarray, tau) -> np.ndarray:
    """Proximal operator of tau·‖·‖₁"""
    return np.sign(v) * np.maximum(np.abs(v) - tau, 0.0)


def candidate_grid(n_grid: int) -> np.ndarray:
    n_grid = validate_positive_int(n_grid, "n_grid")
    return TWO_PI * np.arange(n_grid) / n_grid


def fourier_dictionary(locations: np.ndarray, kc: int) -> np.ndarray:
    """Real-stacked F with F·a = (Re ŵ[0..kc], Im ŵ[1..kc]) for w = Σ a_n δ_{x_n}"""
    kx = np.outer(np.arange(kc + 1), locations)
    return np.vstack([np.cos(kx), -np.sin(kx[1:])])


def stack_observation(y: ObservationVector) -> np.ndarray:
    return np.concatenate([y.coeffs.real, y.coeffs[1:].imag])


@dataclass
class AdmmResult:
    weights: np.ndarray
    iterations: int
    primal_res: float
    gap: float
    rho: float


def basis_pursuit_admm(
    F: np.ndarray,
    b: np.ndarray,
    rho: Optional[float] = None,
    gap_tol: float = settings.RECOVERY_ADMM_TOL,
    res_tol: float = settings.RECOVERY_ADMM_RES_TOL,
    alpha: float = 1.6,
    max_iter: int = settings.LP_MAX_ITER,
    check_every: int = 10,
) -> AdmmResult:
    """min ‖a‖₁ s.t. F a = b by over-relaxed ADMM with residual balancing.

    The x-update is the projection onto {F x = b}, applied through a cached
    Cholesky factor of F Fᵀ. Every `check_every` iterations the scaled
    multiplier ρu is projected onto range(Fᵀ) and rescaled into the dual
    feasible set; iteration stops once the duality gap is below
    gap_tol·max(1, ‖x‖₁) and ‖x − z‖ below res_tol·max(1, ‖z‖). Hitting
    max_iter raises ConvergenceFailure.
    """
    m, n = F.shape
    try:
        gram = scipy.linalg.cho_factor(F @ F.T)
    except scipy.linalg.LinAlgError as e:
        raise ConvergenceFailure(f"dictionary Gram matrix is not positive definite: {e}", "grid")

    def project(v):
        return v - F.T @ scipy.linalg.cho_solve(gram, F @ v)

    q = F.T @ scipy.linalg.cho_solve(gram, b)
    rho = float(np.sqrt(n)) if rho is None else float(rho)
    x = q.copy()
    z = soft_threshold(x, 1.0 / rho)
    u = np.zeros(n)
    r_norm = gap = np.inf

    for it in range(1, max_iter + 1):
        x = project(z - u) + q
        x_hat = alpha * x + (1.0 - alpha) * z
        z_old = z
        z = soft_threshold(x_hat + u, 1.0 / rho)
        u = u + x_hat - z

        r_norm = float(np.linalg.norm(x - z))
        s_norm = float(rho * np.linalg.norm(z - z_old))
        if it % check_every == 0:
            nu = scipy.linalg.cho_solve(gram, F @ (rho * u))
            scale = max(1.0, float(np.max(np.abs(F.T @ nu))))
            primal = float(np.sum(np.abs(x)))
            gap = primal - float(b @ nu) / scale
            if gap <= gap_tol * max(1.0, primal) and r_norm <= res_tol * max(1.0, float(np.linalg.norm(z))):
                logger.debug("bp_admm_converged", iterations=it, primal_res=r_norm, gap=gap)
                return AdmmResult(z, it, r_norm, gap, rho)

        if r_norm > 10.0 * s_norm:
            rho *= 2.0
            u /= 2.0
        elif s_norm > 10.0 * r_norm:
            rho /= 2.0
            u *= 2.0

    logger.warning("bp_admm_iteration_cap", iterations=max_iter, primal_res=r_norm, gap=gap)
    raise ConvergenceFailure(f"ADMM did not converge in {max_iter} iterations (gap {gap:.3e})", "grid")


@dataclass
class GridLpResult:
    value: float
    weights: np.ndarray
    grid: np.ndarray
    iterations: int
    residual: float


def solve_grid_lp(
    y: ObservationVector,
    n_grid: int,
    tol: float = settings.LP_TOL,
    max_iter: int = settings.LP_MAX_ITER,
) -> GridLpResult:
    """min Σ(a⁺ + a⁻) s.t. F(a⁺ − a⁻) = y, a± >= 0, solved by HiGHS"""
    grid = candidate_grid(n_grid)
    F = fourier_dictionary(grid, y.kc)
    b = stack_observation(y)
    res = linprog(
        c=np.ones(2 * n_grid),
        A_eq=np.hstack([F, -F]),
        b_eq=b,
        bounds=(0, None),
        method="highs",
        options={
            "primal_feasibility_tolerance": tol,
            "dual_feasibility_tolerance": tol,
            "maxiter": max_iter,
        },
    )
    if res.status != 0:
        logger.warning("grid_lp_failed", status=res.status, message=res.message)
        raise ConvergenceFailure(f"HiGHS status {res.status}: {res.message}", "oracle")

    weights = res.x[:n_grid] - res.x[n_grid:]
    residual = float(np.max(np.abs(F @ weights - b))) if b.size else 0.0
    iterations = int(getattr(res, "nit", 0))
    logger.debug("grid_lp_solved", n_grid=n_grid, value=float(res.fun), iterations=iterations, residual=residual)
    return GridLpResult(float(res.fun), weights, grid, iterations, residual)
