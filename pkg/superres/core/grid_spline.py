"""
Periodic B-spline discretization of the D^M-penalized quadratic-fidelity
problem and its ADMM solver.

Spline Fourier coefficients use the mean-normalized convention
f̂[k] = (1/2π) ∫ f(t) e^{-ikt} dt, so f̂[0] is the mean of f.
"""
from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
import structlog
from scipy.interpolate import BSpline
from scipy.special import bernoulli, comb, factorial, roots_legendre

from superres.config import settings
from superres.core.basis_pursuit import soft_threshold, stack_observation
from superres.core.measures import TWO_PI, ObservationVector, wrap
from superres.utils.exceptions import ConvergenceFailure, InvalidInput
from superres.utils.validation import validate_grid_size, validate_nonnegative_int, validate_positive_real

logger = structlog.get_logger(__name__)


@lru_cache(maxsize=16)
def cardinal_bspline(m: int) -> BSpline:
    """B_M on the knots 0..M (degree M-1), zero outside its support"""
    return BSpline.basis_element(np.arange(m + 1, dtype=float), extrapolate=False)


def _bspline_values(m: int, s: np.ndarray) -> np.ndarray:
    return np.nan_to_num(cardinal_bspline(m)(s), nan=0.0)


@dataclass(frozen=True)
class SplineGrid:
    p: int
    m: int
    kc: int
    bspline_fourier: np.ndarray
    dm_dft: np.ndarray

    @property
    def h(self) -> float:
        return TWO_PI / self.p

    @property
    def reg_scale(self) -> float:
        return (self.p / TWO_PI) ** (self.m - 1)

    @property
    def aliased(self) -> bool:
        """H rows alias onto each other under the length-P DFT"""
        return self.p <= 2 * self.kc

    def knots(self) -> np.ndarray:
        return self.h * np.arange(self.p)

    def bspline_hat(self, k) -> np.ndarray:
        """β̂[k] for any integer k with |k| <= kc (negative k by conjugation)"""
        k = np.asarray(k)
        values = self.bspline_fourier[np.abs(k)]
        return np.where(k < 0, np.conj(values), values)

    def filter_dft(self) -> np.ndarray:
        """d_M itself, the M-th order cyclic backward difference"""
        return np.fft.ifft(self.dm_dft).real

    def h_matrix(self) -> np.ndarray:
        """Complex (kc+1) x P system matrix with H[k, l] = e^{-ikl·2π/P} β̂[k]"""
        k = np.arange(self.kc + 1)
        return np.exp(-1j * np.outer(k, self.knots())) * self.bspline_fourier[:, None]


def bspline_fourier_closed_form(p: int, m: int, kc: int) -> np.ndarray:
    """β̂[k] = P^{M-1} ((1 - e^{-ik2π/P}) / (2πik))^M for k = 0..kc, β̂[0] = 1/P"""
    k = np.arange(1, kc + 1)
    ratio = (1.0 - np.exp(-1j * k * TWO_PI / p)) / (TWO_PI * 1j * k)
    values = np.empty(kc + 1, dtype=complex)
    values[0] = 1.0 / p
    values[1:] = p ** (m - 1) * ratio ** m
    return values


def bspline_fourier_quadrature(p: int, m: int, kc: int, nodes: int = settings.QUADRATURE_FACTOR) -> np.ndarray:
    """(1/2π) ∫ β(t) e^{-ikt} dt by Gauss-Legendre on every knot interval of the support"""
    xi, wq = roots_legendre(nodes)
    s = (np.arange(m)[:, None] + 0.5 * (xi[None, :] + 1.0)).ravel()
    weights = np.tile(0.5 * wq, m)
    h = TWO_PI / p
    integrand = weights * _bspline_values(m, s)
    k = np.arange(kc + 1)
    return (h / TWO_PI) * (np.exp(-1j * np.outer(k, s * h)) @ integrand)


@lru_cache(maxsize=256)
def build_grid(p: int, m: int, kc: int) -> SplineGrid:
    p, m = validate_grid_size(p, m)
    kc = validate_nonnegative_int(kc, "kc")

    closed = bspline_fourier_closed_form(p, m, kc)
    quadrature = bspline_fourier_quadrature(p, m, kc)
    err = np.abs(closed - quadrature)
    if np.any(err > settings.QUADRATURE_TOL * np.abs(closed) + 1e-14):
        worst = int(np.argmax(err))
        raise ConvergenceFailure(
            f"B-spline Fourier table disagrees with quadrature at k={worst} ({err[worst]:.3e})", "build_grid"
        )

    dm = (1.0 - np.exp(-1j * np.arange(p) * TWO_PI / p)) ** m
    dm[0] = 0.0
    closed.setflags(write=False)
    dm.setflags(write=False)
    return SplineGrid(p=p, m=m, kc=kc, bspline_fourier=closed, dm_dft=dm)


@dataclass(frozen=True)
class GridProblem:
    y: ObservationVector
    lam: float
    grid: SplineGrid

    def __post_init__(self):
        validate_positive_real(self.lam, "lambda")
        if self.y.kc != self.grid.kc:
            raise InvalidInput(f"observations have kc={self.y.kc}, grid has kc={self.grid.kc}", "kc")

    @property
    def reg_scale(self) -> float:
        return self.grid.reg_scale

    @property
    def h_matrix(self) -> np.ndarray:
        """Real-stacked rows (Re H, Im H[1:]), shape (2kc+1) x P"""
        H = self.grid.h_matrix()
        return np.vstack([H.real, H[1:].imag])

    def forward(self, c: np.ndarray) -> np.ndarray:
        """f̂[0..kc] of Σ c[l] β(· - l·2π/P)"""
        k = np.arange(self.grid.kc + 1)
        return self.grid.bspline_fourier * np.fft.fft(c)[k % self.grid.p]

    def innovation(self, c: np.ndarray) -> np.ndarray:
        return self.reg_scale * cyclic_difference(self.grid, c)

    def objective(self, c: np.ndarray) -> float:
        fidelity = 0.5 * float(np.sum(np.abs(self.forward(c) - self.y.coeffs) ** 2))
        return fidelity + self.lam * float(np.sum(np.abs(self.innovation(c))))


def cyclic_difference(grid: SplineGrid, c: np.ndarray) -> np.ndarray:
    """d_M ∗ c (cyclic)"""
    return np.fft.ifft(grid.dm_dft * np.fft.fft(c)).real


def _cyclic_difference_adjoint(grid: SplineGrid, v: np.ndarray) -> np.ndarray:
    return np.fft.ifft(np.conj(grid.dm_dft) * np.fft.fft(v)).real


@dataclass
class GridSolution:
    c: np.ndarray
    innovation: np.ndarray
    objective: float
    iterations: int
    converged: bool = True
    trace: Optional[List[Tuple[int, float, float, float]]] = field(default=None, repr=False)

    @property
    def mean(self) -> float:
        return float(np.mean(self.c))


class _CoefficientUpdate:
    """Solves (HᵀH + ρ DᵀD) c = Hᵀy + ρ Dᵀ v.

    Diagonal in the length-P DFT basis when P > 2kc; otherwise a dense
    Cholesky factor is cached per value of ρ.
    """

    def __init__(self, problem: GridProblem):
        self.problem = problem
        self.grid = problem.grid
        self._factor = None
        self._factor_rho = None
        if self.grid.aliased:
            self._H = problem.h_matrix
            self._D = scipy.linalg.circulant(self.grid.filter_dft())
            self._Hty = self._H.T @ stack_observation(problem.y)

    def __call__(self, v: np.ndarray, rho: float) -> np.ndarray:
        if self.grid.aliased:
            return self._dense(v, rho)
        return self._diagonal(v, rho)

    def _diagonal(self, v: np.ndarray, rho: float) -> np.ndarray:
        grid, y = self.grid, self.problem.y.coeffs
        P, D, beta = grid.p, grid.dm_dft, grid.bspline_fourier
        Vh = np.fft.fft(v)
        C = np.empty(P, dtype=complex)
        C[1:] = Vh[1:] / D[1:]
        C[0] = y[0].real * P
        if grid.kc:
            idx = np.arange(1, grid.kc + 1)
            w = 2.0 * rho / P
            C[idx] = (np.conj(beta[idx]) * y[idx] + w * np.conj(D[idx]) * Vh[idx]) / (
                np.abs(beta[idx]) ** 2 + w * np.abs(D[idx]) ** 2
            )
            C[P - idx] = np.conj(C[idx])
        return np.fft.ifft(C).real

    def _dense(self, v: np.ndarray, rho: float) -> np.ndarray:
        if self._factor is None or self._factor_rho != rho:
            system = self._H.T @ self._H + rho * self._D.T @ self._D
            self._factor = scipy.linalg.cho_factor(system)
            self._factor_rho = rho
        return scipy.linalg.cho_solve(self._factor, self._Hty + rho * self._D.T @ v)


class _ActiveSetPolish:
    """Exact minimizer on a guessed innovation support, certified by the
    duality gap.

    With c = m·1 + G a, G the zero-mean inverse of d_M, the grid problem is a
    lasso in the innovation a with a free constant column and Σ a = 0.
    """

    def __init__(self, problem: GridProblem):
        grid = problem.grid
        self.grid = grid
        self.H = problem.h_matrix
        self.y = stack_observation(problem.y)
        self.tau = problem.lam * grid.reg_scale
        d_inv = np.zeros(grid.p, dtype=complex)
        d_inv[1:] = 1.0 / grid.dm_dft[1:]
        self.d_inv = d_inv
        self.A = self.H @ scipy.linalg.circulant(np.fft.ifft(d_inv).real)
        self.h1 = self.H.sum(axis=1)
        self.limit = self.H.shape[0]
        self.max_passes = 4 * self.limit

    def gap(self, c: np.ndarray) -> Tuple[float, float]:
        """(primal, primal - dual) with the dual point built from the residual"""
        r = self.H @ c - self.y
        primal = 0.5 * float(r @ r) + self.tau * float(np.sum(np.abs(cyclic_difference(self.grid, c))))
        nu = r - self.h1 * float(self.h1 @ r) / float(self.h1 @ self.h1)
        g = self.A.T @ nu
        g = g - 0.5 * (g.max() + g.min())
        peak = float(np.max(np.abs(g)))
        s = 1.0 if peak <= self.tau else self.tau / peak
        dual = -s * float(nu @ self.y) - 0.5 * s * s * float(nu @ nu)
        return primal, primal - dual

    def _kkt(self, support: np.ndarray, signs: np.ndarray) -> Tuple[float, np.ndarray, float]:
        """Stationary point with the innovation restricted to `support` at fixed signs"""
        A_s = self.A[:, support]
        M = np.column_stack([self.h1, A_s])
        g = self.tau * np.concatenate([[0.0], signs])
        N = scipy.linalg.null_space(np.concatenate([[0.0], np.ones(support.size)])[None, :])
        B = M @ N
        Q, R = scipy.linalg.qr(B, mode="economic")
        diag = np.abs(np.diag(R))
        if B.shape[1] <= B.shape[0] and diag.min() > 1e-13 * diag.max():
            w = scipy.linalg.solve_triangular(R, Q.T @ self.y - scipy.linalg.solve_triangular(R, N.T @ g, trans="T"))
        else:
            w = np.linalg.lstsq(B.T @ B, B.T @ self.y - N.T @ g, rcond=None)[0]
        a_s = (N @ w)[1:]
        r = A_s @ a_s - self.y
        mean = -float(self.h1 @ r) / float(self.h1 @ self.h1)
        r = r + mean * self.h1
        mu = -float(np.mean(A_s.T @ r + g[1:])) if support.size else 0.0
        return mean, a_s, mu

    def __call__(self, innovation: np.ndarray) -> np.ndarray:
        """Polished coefficients from an approximate innovation d_M ∗ c"""
        peak = float(np.max(np.abs(innovation)))
        support = np.nonzero(np.abs(innovation) > 1e-6 * peak)[0] if peak > 0 else np.empty(0, dtype=int)
        support = support[np.argsort(-np.abs(innovation[support]))[: self.limit]]
        signs = np.sign(innovation[support])
        mean, a_s = 0.0, np.empty(0)
        for _ in range(self.max_passes):
            mean, a_s, mu = self._kkt(support, signs)
            wrong = a_s * signs <= 0
            if np.any(wrong):
                support, signs, a_s = support[~wrong], signs[~wrong], a_s[~wrong]
                continue
            v = self.A.T @ (mean * self.h1 + self.A[:, support] @ a_s - self.y)
            if support.size == 0:
                # Σ a = 0 leaves the multiplier free; innovations enter in pairs
                v = v - 0.5 * (v.max() + v.min())
                if float(np.max(np.abs(v))) <= self.tau * (1.0 + 1e-9):
                    break
                pair = np.array([int(np.argmax(v)), int(np.argmin(v))])
                support, signs, a_s = pair, np.array([-1.0, 1.0]), np.zeros(2)
                continue
            v = v + mu
            v[support] = 0.0
            j = int(np.argmax(np.abs(v)))
            if abs(v[j]) <= self.tau * (1.0 + 1e-9):
                break
            support = np.append(support, j)
            signs = np.append(signs, -np.sign(v[j]))
            a_s = np.append(a_s, 0.0)
        a = np.zeros(self.grid.p)
        a[support] = a_s
        return mean + np.fft.ifft(self.d_inv * np.fft.fft(a)).real


def prolong(c: np.ndarray, m: int) -> np.ndarray:
    """Coefficients on the grid of 2P knots representing the same order-m spline.

    Two-scale relation B_M(x) = 2^{1-M} Σ_j C(M, j) B_M(2x - j).
    """
    c = np.asarray(c, dtype=float)
    up = np.zeros(2 * c.size)
    up[::2] = c
    mask = comb(m, np.arange(m + 1)) * 2.0 ** (1 - m)
    return sum(w * np.roll(up, j) for j, w in enumerate(mask))


def solve_grid(
    prob: GridProblem,
    rho: float = settings.SPLINE_RHO,
    abs_tol: float = settings.SPLINE_ABS_TOL,
    rel_tol: float = settings.SPLINE_REL_TOL,
    gap_tol: float = settings.SPLINE_GAP_TOL,
    max_iter: int = settings.SPLINE_MAX_ITER,
    trace: bool = False,
    init: Optional[np.ndarray] = None,
    check_every: int = 10,
) -> GridSolution:
    """ADMM on argmin_c ½Σ_{k<=kc}|f̂[k] - y_k|² + λ(P/2π)^{M-1}‖d_M ∗ c‖₁
    with the split z = d_M ∗ c and residual-balanced ρ.

    Every `check_every` iterations the current innovation support is
    polished to an exact minimizer; the solver stops as soon as the best
    iterate's duality gap is below gap_tol relative to its objective, or on
    the residual rule. `init` warm-starts the split variable from a
    coefficient vector, e.g. a prolonged coarse-grid solution.

    Every c is admissible, so the iterate with the lowest objective is
    returned and the traced objective is that running minimum.
    """
    grid = prob.grid
    P = grid.p
    scale = prob.y.max_abs()
    if scale == 0.0:
        zeros = np.zeros(P)
        return GridSolution(zeros, zeros.copy(), 0.0, 0, True, [] if trace else None)

    # normalized copy: y/σ with λ/σ has the minimizer c/σ
    normalized = GridProblem(prob.y.scaled(1.0 / scale), prob.lam / scale, grid)
    update = _CoefficientUpdate(normalized)
    polish = _ActiveSetPolish(normalized)
    threshold = normalized.lam * grid.reg_scale

    best_c, best_obj = None, np.inf
    z = np.zeros(P)
    if init is not None:
        init = np.asarray(init, dtype=float) / scale
        if init.shape != (P,):
            raise InvalidInput(f"warm start has shape {init.shape}, grid has {P} knots", "init")
        z = cyclic_difference(grid, init)
        best_c, best_obj = init, normalized.objective(init)
    u = np.zeros(P)
    rows: List[Tuple[int, float, float, float]] = []
    root_p = np.sqrt(P)
    converged = False
    r_norm = s_norm = gap = np.inf

    it = 0
    for it in range(1, max_iter + 1):
        c = update(z - u, rho)
        Dc = cyclic_difference(grid, c)
        z_old = z
        z = soft_threshold(Dc + u, threshold / rho)
        u = u + Dc - z

        obj = normalized.objective(c)
        if obj < best_obj:
            best_c, best_obj = c, obj

        r_norm = float(np.linalg.norm(Dc - z))
        s_norm = float(rho * np.linalg.norm(_cyclic_difference_adjoint(grid, z - z_old)))
        eps_pri = root_p * abs_tol + rel_tol * max(np.linalg.norm(Dc), np.linalg.norm(z))
        eps_dual = root_p * abs_tol + rel_tol * rho * np.linalg.norm(_cyclic_difference_adjoint(grid, u))
        converged = r_norm < eps_pri and s_norm < eps_dual

        if not converged and it % check_every == 0:
            candidate = polish(z)
            cand_obj = normalized.objective(candidate)
            if cand_obj < best_obj:
                best_c, best_obj = candidate, cand_obj
            primal, gap = polish.gap(best_c)
            converged = gap <= gap_tol * primal

        if trace:
            rows.append((it, best_obj * scale * scale, r_norm * scale, s_norm * scale))
        if converged:
            break

        if r_norm > 10.0 * s_norm:
            rho *= 2.0
            u /= 2.0
        elif s_norm > 10.0 * r_norm:
            rho /= 2.0
            u *= 2.0

    if not converged:
        logger.warning(
            "grid_admm_iteration_cap", p=P, m=grid.m, iterations=it, primal_res=r_norm, dual_res=s_norm, gap=gap
        )
        raise ConvergenceFailure(f"grid ADMM did not converge in {max_iter} iterations", "solve_grid")

    c = best_c * scale
    logger.debug("grid_admm_converged", p=P, m=grid.m, iterations=it, objective=prob.objective(c), gap=gap)
    return GridSolution(
        c=c,
        innovation=prob.innovation(c),
        objective=prob.objective(c),
        iterations=it,
        converged=True,
        trace=rows if trace else None,
    )


def reconstruct(sol: GridSolution, grid: SplineGrid, t) -> np.ndarray:
    """f(t) = Σ_l c[l] B_M((t - l·h)/h), periodized; only the M overlapping shifts are summed"""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    u = wrap(t) / grid.h
    base = np.floor(u).astype(int)
    frac = u - base
    out = np.zeros_like(frac)
    for j in range(grid.m):
        out += sol.c[(base - j) % grid.p] * _bspline_values(grid.m, frac + j)
    return out


def innovation_knots(sol: GridSolution, grid: SplineGrid, rel_tol: float = 1e-6) -> np.ndarray:
    """Grid locations carrying a nonzero innovation weight"""
    a = sol.innovation
    peak = float(np.max(np.abs(a))) if a.size else 0.0
    if peak == 0.0:
        return np.empty(0)
    return grid.knots()[np.abs(a) > rel_tol * peak]


def truncated_fourier(y: ObservationVector, t) -> np.ndarray:
    """Low-pass baseline y_0 + 2 Σ_{k>=1} Re(y_k e^{ikt})"""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    k = np.arange(1, y.kc + 1)
    return y.y0 + 2.0 * (np.exp(1j * np.outer(t, k)) @ y.coeffs[1:]).real


def periodic_green(t, m: int) -> np.ndarray:
    """Zero-mean periodic Green's function of D^M: Ĝ[k] = 1/(2π(ik)^M), k != 0.

    G(t) = -(2π)^{M-1}/M! · B_M(t/2π) with B_M the Bernoulli polynomial.
    """
    x = wrap(np.asarray(t, dtype=float)) / TWO_PI
    b = bernoulli(m)
    poly = sum(comb(m, j, exact=True) * b[j] * x ** (m - j) for j in range(m + 1))
    return -(TWO_PI ** (m - 1)) / factorial(m, exact=True) * poly


@dataclass(frozen=True)
class SplineSpec:
    """Ground-truth periodic D^M-spline: mean + Σ a_n G(· - x_n) with Σ a_n = 0"""
    knots: np.ndarray
    amplitudes: np.ndarray
    m: int
    mean: float = 0.0

    def __post_init__(self):
        knots = np.atleast_1d(np.asarray(self.knots, dtype=float))
        amps = np.atleast_1d(np.asarray(self.amplitudes, dtype=float))
        if knots.shape != amps.shape:
            raise InvalidInput("knots and amplitudes must have the same length", "knots")
        if abs(float(np.sum(amps))) > 1e-9 * max(1.0, float(np.sum(np.abs(amps)))):
            raise InvalidInput("innovation amplitudes of a periodic spline must sum to zero", "amplitudes")
        object.__setattr__(self, "knots", wrap(knots))
        object.__setattr__(self, "amplitudes", amps)

    def fourier(self, kc: int) -> ObservationVector:
        k = np.arange(1, kc + 1)
        coeffs = np.empty(kc + 1, dtype=complex)
        coeffs[0] = self.mean
        coeffs[1:] = (np.exp(-1j * np.outer(k, self.knots)) @ self.amplitudes) / (TWO_PI * (1j * k) ** self.m)
        return ObservationVector(coeffs)

    def evaluate(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        shifted = t[:, None] - self.knots[None, :]
        return self.mean + periodic_green(shifted, self.m) @ self.amplitudes
