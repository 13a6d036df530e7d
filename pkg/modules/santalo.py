# modules/santalo.py
# Funk-Santalo points: minimizers of c1(P, .) and of the ball volume at fixed radius

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .asymptotics import c1_at_point
from .config import (
    ARMIJO_C, BACKTRACK, FD_STEP_SCALE, NEWTON_MAX_ITER, SANTALO_INF_TOL, SANTALO_R_MAX_ITER,
    SANTALO_R_TOL, STEP_CLIP,
)
from .errors import MaxIterations, NonpositiveRadius
from .funk import DensityKernel, ball_volume_mesh, evaluate_on_mesh
from .geometry import Polytope, flag_weights

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SantaloResult:
    point: np.ndarray
    objective: float
    residual: float  # stationarity norm at the returned point
    iterations: int


def _start_point(P: Polytope, start: Optional[Sequence[float]]) -> np.ndarray:
    if start is not None:
        return P.require_interior(start, "start")
    return np.zeros(P.dim) if P.origin_interior() else P.vertex_centroid.copy()


def _feasible_step(P: Polytope, z: np.ndarray, direction: np.ndarray) -> float:
    """Largest t <= 1 keeping every slack above STEP_CLIP times its current value"""
    s = P.slacks(z)[0]
    rate = P.normals @ direction
    moving = rate > 0
    if not moving.any():
        return 1.0
    return float(min(1.0, np.min((1.0 - STEP_CLIP) * s[moving] / rate[moving])))


# ---------------------------------------------------------------------------
# s_infinity
# ---------------------------------------------------------------------------

def santalo_barrier(P: Polytope, z: np.ndarray,
                    weights: Optional[np.ndarray] = None) -> Tuple[float, np.ndarray, np.ndarray]:
    """phi(z) = -sum_F |flags(F)| log s_F(z) with its gradient and Hessian.

    phi differs from c1(P, z) by a positive factor and a constant, and its
    gradient sum_F w_F a_F / s_F(z) is the weighted sum of the vertices of P^z.
    """
    w = flag_weights(P) if weights is None else weights
    s = P.slacks(z)[0]
    if np.any(s <= 0):
        return np.inf, np.full(P.dim, np.nan), np.full((P.dim, P.dim), np.nan)
    scaled = P.normals / s[:, None]
    value = float(-w @ np.log(s))
    grad = w @ scaled
    hess = (scaled * w[:, None]).T @ scaled
    return value, grad, hess


def santalo_infinity(P: Polytope, tol: float = SANTALO_INF_TOL,
                     start: Optional[Sequence[float]] = None) -> SantaloResult:
    """s_inf(P): damped Newton on the log barrier weighted by facet flag counts"""
    w = flag_weights(P)
    z = _start_point(P, start)
    value, grad, hess = santalo_barrier(P, z, w)

    for it in range(NEWTON_MAX_ITER + 1):
        residual = float(np.linalg.norm(grad))
        logger.debug("s_inf iter %d: z=%s residual=%.3g", it, np.round(z, 12).tolist(), residual)
        if residual <= tol:
            logger.info("s_inf converged in %d iterations", it)
            return SantaloResult(z, c1_at_point(P, z), residual, it)
        if it == NEWTON_MAX_ITER:
            break

        direction = -np.linalg.solve(hess, grad)
        t = _feasible_step(P, z, direction)
        slope = float(grad @ direction)
        while True:
            trial = z + t * direction
            trial_value, trial_grad, trial_hess = santalo_barrier(P, trial, w)
            if trial_value <= value + ARMIJO_C * t * slope:
                break
            t *= BACKTRACK
            if t < 1e-16:
                raise MaxIterations(f"line search stalled at residual {residual:.3g}",
                                    SantaloResult(z, c1_at_point(P, z), residual, it))
        z, value, grad, hess = trial, trial_value, trial_grad, trial_hess

    residual = float(np.linalg.norm(grad))
    raise MaxIterations(f"Newton budget of {NEWTON_MAX_ITER} iterations exhausted (residual {residual:.3g})",
                        SantaloResult(z, c1_at_point(P, z), residual, NEWTON_MAX_ITER))


def weighted_dual_centroid(P: Polytope, x: Sequence[float]) -> np.ndarray:
    """Flag-count weighted centroid of the vertices of P^x"""
    x = P.require_interior(x)
    w = flag_weights(P)
    q_x = P.normals / P.slacks(x)[0][:, None]
    return (w @ q_x) / w.sum()


# ---------------------------------------------------------------------------
# s_R
# ---------------------------------------------------------------------------

class _FrozenVolume:
    """x -> volht(B(x, R)) on one adaptive mesh, with difference derivatives"""

    def __init__(self, P: Polytope, R: float, mesh, h: float):
        self.P = P
        self.R = R
        self.mesh = mesh
        self.h = h

    def __call__(self, x: np.ndarray) -> float:
        if not self.P.contains(x):
            return np.inf
        return evaluate_on_mesh(self.P, x, self.R, self.mesh)

    def derivatives(self, x: np.ndarray, fx: float) -> Tuple[np.ndarray, np.ndarray]:
        n, h = len(x), self.h
        eye = np.eye(n) * h
        plus = np.array([self(x + e) for e in eye])
        minus = np.array([self(x - e) for e in eye])
        grad = (plus - minus) / (2 * h)
        hess = np.diag((plus - 2 * fx + minus) / h ** 2)
        for i in range(n):
            for j in range(i + 1, n):
                mixed = (self(x + eye[i] + eye[j]) - self(x + eye[i] - eye[j])
                         - self(x - eye[i] + eye[j]) + self(x - eye[i] - eye[j])) / (4 * h * h)
                hess[i, j] = hess[j, i] = mixed
        return grad, hess


def santalo_at_radius(P: Polytope, R: float, tol: float = SANTALO_R_TOL,
                      start: Optional[Sequence[float]] = None) -> SantaloResult:
    """s_R(P), the center minimizing volht(B(x, R)).

    Each iteration freezes the adaptive mesh at the current center, so the
    difference gradient and Hessian see a smooth function of x. Newton steps
    fall back to steepest descent when the Hessian is not positive definite.
    """
    if not R > 0:
        raise NonpositiveRadius(f"radius must be positive, got {R}")
    z = santalo_infinity(P).point if start is None else P.require_interior(start, "start")
    h = FD_STEP_SCALE * P.inradius
    mesh_rel_tol = 0.01 * h * h

    residual = np.inf
    for it in range(1, SANTALO_R_MAX_ITER + 1):
        estimate, mesh = ball_volume_mesh(P, z, R, tol=0.0, rel_tol=mesh_rel_tol)
        f = _FrozenVolume(P, R, mesh, h)
        fz = f(z)
        grad, hess = f.derivatives(z, fz)
        residual = float(np.linalg.norm(grad))

        try:
            np.linalg.cholesky(hess)
            direction = -np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            direction = -grad
        t = _feasible_step(P, z, direction)
        slope = float(grad @ direction)
        while f(z + t * direction) > fz + ARMIJO_C * t * slope and t * np.linalg.norm(direction) > 1e-3 * tol:
            t *= BACKTRACK
        step = t * direction
        z = z + step
        logger.debug("s_R iter %d (R=%g): z=%s |grad|=%.3g |step|=%.3g",
                     it, R, np.round(z, 10).tolist(), residual, float(np.linalg.norm(step)))
        if np.linalg.norm(step) <= tol:
            logger.info("s_R converged at R=%g in %d iterations", R, it)
            return SantaloResult(z, estimate.value, residual, it)

    raise MaxIterations(f"s_R did not converge at R={R} in {SANTALO_R_MAX_ITER} iterations",
                        SantaloResult(z, float("nan"), residual, SANTALO_R_MAX_ITER))


def santalo_curve(P: Polytope, R_grid: Sequence[float], tol: float = SANTALO_R_TOL) -> List[SantaloResult]:
    """s_R over a grid of radii, each solve warm-started from the previous point"""
    out = []
    start = santalo_infinity(P).point
    for R in R_grid:
        res = santalo_at_radius(P, R, tol, start=start)
        out.append(res)
        start = res.point
    return out


# ---------------------------------------------------------------------------
# classical Santalo point
# ---------------------------------------------------------------------------

def _log_density(P: Polytope, x: np.ndarray) -> float:
    if not P.contains(x):
        return np.inf
    return float(np.log(DensityKernel(P, x).value_at_reference))


def classical_santalo_point(P: Polytope, start: Optional[Sequence[float]] = None) -> SantaloResult:
    """Minimizer of x -> |P^x|; the residual is |grad log|P^x|| at the result"""
    x0 = P.vertex_centroid if start is None else P.require_interior(start, "start")
    scale = P.inradius
    res = minimize(lambda x: _log_density(P, x), x0, method="Nelder-Mead",
                   options={"xatol": 1e-11 * scale, "fatol": 1e-15, "maxiter": 20_000 * P.dim})
    x = np.asarray(res.x, dtype=float)
    kernel = DensityKernel(P, x)
    residual = float(np.linalg.norm(kernel.gradient_at_reference) / kernel.value_at_reference)
    if not res.success:
        raise MaxIterations(f"Santalo point search failed: {res.message}",
                            SantaloResult(x, kernel.value_at_reference, residual, int(res.nit)))
    logger.info("classical Santalo point %s (|P^x| = %.12g)", np.round(x, 10).tolist(), kernel.value_at_reference)
    return SantaloResult(x, kernel.value_at_reference, residual, int(res.nit))
