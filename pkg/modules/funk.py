# modules/funk.py
# Funk distance, Funk balls and Holmes-Thompson volumes of their balls

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from scipy import sparse

from .config import DEFAULT_CELL_WIDTH, INCIDENCE_TOL, INITIAL_CELL_WIDTH, LOG_GRADING_MARGIN, default_tol
from .errors import NonpositiveRadius, NotStrictlyContained, ToleranceNotReached
from .geometry import Polytope
from .quadrature import SimplexIntegrator, ordered_simplex_cells
from .utils import lam_from_radius, unit_ball_volume

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VolumeEstimate:
    """Holmes-Thompson volume with the quadrature's error estimate"""
    value: float
    abs_error_estimate: float
    evaluations: int
    converged: bool = True


@dataclass(frozen=True)
class VolumeMesh:
    """Adaptive mesh of a ball integral in graded flag coordinates"""
    cells: np.ndarray
    owners: np.ndarray
    horizon: float  # truncation T of the graded coordinates


class DensityKernel:
    """Vectorized |P^y| for a polytope, through the dual flags of P^c.

    With q(F) the barycenter of the dual face F° of P - c, the density at y is
    (1/n!) sum_f |det(q(f_{n-1}), ..., q(f_0))| / prod_i (1 - <q(f_i), y - c>).
    Each factor 1 - <q(F), y - c> is the mean over facets k containing F of
    the slack ratios s_k(y) / s_k(c), so callers may pass those ratios directly.
    """

    def __init__(self, P: Polytope, reference: Sequence[float]):
        self.P = P
        self.reference = np.asarray(reference, dtype=float)
        self.ref_slacks = P.slacks(self.reference)[0]
        n = P.dim
        q = P.normals / self.ref_slacks[:, None]

        proper = [f for f in P.faces if 0 <= f.dim < n]
        column = {f.index: c for c, f in enumerate(proper)}
        rows, cols, vals = [], [], []
        for c, face in enumerate(proper):
            for k in face.facets:
                rows.append(c)
                cols.append(k)
                vals.append(1.0 / len(face.facets))
        self.face_means = sparse.csr_matrix((vals, (rows, cols)), shape=(len(proper), len(P.offsets)))

        self.flag_columns = np.array([[column[f[i]] for i in range(n)] for f in P.flags], dtype=np.int64)
        self.dual_points = self.face_means @ q  # q(F) of P - c, one row per proper face
        dets = np.abs(np.linalg.det(self.dual_points[self.flag_columns]))
        self.weights = dets / math.factorial(n)

    @property
    def value_at_reference(self) -> float:
        return float(np.sum(self.weights))

    @property
    def gradient_at_reference(self) -> np.ndarray:
        """d|P^y|/dy at y = c, i.e. sum_f weight_f sum_i q(f_i)"""
        return self.weights @ self.dual_points[self.flag_columns].sum(axis=1)

    def from_ratios(self, ratios: np.ndarray) -> np.ndarray:
        """Density from slack ratios s_k(y) / s_k(c), one row per point"""
        means = (self.face_means @ ratios.T).T
        prods = np.prod(means[:, self.flag_columns], axis=2)
        return (1.0 / prods) @ self.weights

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self.from_ratios(self.P.slacks(points) / self.ref_slacks)


# ---------------------------------------------------------------------------
# metric
# ---------------------------------------------------------------------------

def funk_distance(P: Polytope, p: Sequence[float], q: Sequence[float]) -> float:
    """d_F(p, q) = log(|pb| / |qb|), b where the ray from p through q leaves P.

    Along the ray the facet that is hit first maximizes s_k(p) / s_k(q), so
    the distance is the largest log slack ratio (zero when p == q).
    """
    p = P.require_interior(p, "p")
    q = P.require_interior(q, "q")
    ratios = P.slacks(p)[0] / P.slacks(q)[0]
    return float(max(0.0, np.max(np.log(ratios))))


def funk_ball(P: Polytope, x: Sequence[float], R: float) -> Polytope:
    """B_P(x, R) = x + (1 - e^-R)(P - x)"""
    if not R > 0:
        raise NonpositiveRadius(f"radius must be positive, got {R}")
    x = P.require_interior(x, "center")
    return P.homothety(x, lam_from_radius(R))


def ht_density(P: Polytope, y: Sequence[float]) -> float:
    """|P^y|, the volume of the polar of P taken at y"""
    y = P.require_interior(y)
    return DensityKernel(P, y).value_at_reference


def mahler_volume(P: Polytope, x: Optional[Sequence[float]] = None) -> float:
    """|P| |P^x|; the small-radius limit of omega_n volht(B(x, R)) / R^n"""
    x = np.zeros(P.dim) if x is None else x
    return P.volume * ht_density(P, x)


# ---------------------------------------------------------------------------
# ball volumes
# ---------------------------------------------------------------------------

def _horizon(R: float) -> float:
    return R + LOG_GRADING_MARGIN


def _root_cells(n: int, horizon: float) -> np.ndarray:
    width = INITIAL_CELL_WIDTH.get(n, DEFAULT_CELL_WIDTH)
    return ordered_simplex_cells(n, horizon, max(2, int(math.ceil(horizon / width))))


def _tail_weights(t: np.ndarray) -> np.ndarray:
    """Barycentric weights from graded coordinates sigma_j = exp(-t_j)"""
    K, n = t.shape
    beta = np.empty((K, n + 1))
    beta[:, 0] = -np.expm1(-t[:, 0])
    if n > 1:
        gaps = t[:, 1:] - t[:, :-1]
        beta[:, 1:n] = np.exp(-t[:, :-1]) * -np.expm1(-gaps)
    beta[:, n] = np.exp(-t[:, -1])
    return beta


class _BallIntegrand:
    """Integrand of omega_n volht(B(x, R)) over all flags, in graded coordinates.

    Flag simplex f has vertices x + lam (p(f_j) - x), j < n, and x itself; a
    point with barycentric weights beta has slack ratios sum_j beta_j rho_j, with
    rho_j = e^-R + lam s(p(f_j)) / s(x) and the incident slacks exactly zero.
    """

    def __init__(self, P: Polytope, x: np.ndarray, R: float):
        n = P.dim
        lam = lam_from_radius(R)
        self.kernel = DensityKernel(P, x)
        s_x = self.kernel.ref_slacks
        tau = math.exp(-R)

        flags = P.flags
        vertex_ratios = np.empty((len(flags), n + 1, len(s_x)))
        jacobians = np.empty(len(flags))
        for a, f in enumerate(flags):
            pts = np.array([P.face_point(f[j]) for j in range(n)])
            s = P.slacks(pts)
            for j in range(n):
                s[j, sorted(P.faces[f[j]].facets)] = 0.0
            vertex_ratios[a, :n] = tau + lam * s / s_x
            vertex_ratios[a, n] = 1.0
            jacobians[a] = lam ** n * abs(np.linalg.det(pts - x))
        self.vertex_ratios = vertex_ratios
        self.jacobians = jacobians

    def __call__(self, t: np.ndarray, owners: np.ndarray) -> np.ndarray:
        beta = _tail_weights(t)
        ratios = np.einsum("kj,kjm->km", beta, self.vertex_ratios[owners])
        return self.kernel.from_ratios(ratios) * self.jacobians[owners] * np.exp(-t.sum(axis=1))


def _check_ball_args(P: Polytope, x: Optional[Sequence[float]], R: float) -> np.ndarray:
    if not R > 0:
        raise NonpositiveRadius(f"radius must be positive, got {R}")
    return P.require_interior(np.zeros(P.dim) if x is None else x, "center")


def ball_volume_mesh(P: Polytope, x: Optional[Sequence[float]], R: float,
                     tol: Optional[float] = None, rel_tol: float = 0.0,
                     threads: Optional[int] = None):
    """ball_volume plus the adaptive mesh it converged on"""
    x = _check_ball_args(P, x, R)
    n = P.dim
    tol = default_tol(n) if tol is None else tol
    omega = unit_ball_volume(n)
    horizon = _horizon(R)

    roots = _root_cells(n, horizon)
    n_flags = len(P.flags)
    cells = np.tile(roots, (n_flags, 1, 1))
    owners = np.repeat(np.arange(n_flags), len(roots))

    integrator = SimplexIntegrator(_BallIntegrand(P, x, R), threads=threads)
    res = integrator.integrate(cells, owners, tol * omega, rel_tol)
    estimate = VolumeEstimate(res.value / omega, res.error / omega, res.evaluations, res.converged)
    logger.debug("ball volume R=%g: %.15g +- %.2g (%d evaluations)",
                 R, estimate.value, estimate.abs_error_estimate, estimate.evaluations)
    if not res.converged:
        raise ToleranceNotReached(
            f"quadrature budget exhausted at R={R}: error {estimate.abs_error_estimate:.3g} > tol {tol:.3g}",
            estimate,
        )
    return estimate, VolumeMesh(res.cells, res.owners, horizon)


def ball_volume(P: Polytope, x: Optional[Sequence[float]], R: float,
                tol: Optional[float] = None, rel_tol: float = 0.0,
                threads: Optional[int] = None) -> VolumeEstimate:
    """volht_P(B_P(x, R)) by adaptive quadrature over the shrunken flag simplices"""
    estimate, _ = ball_volume_mesh(P, x, R, tol, rel_tol, threads)
    return estimate


def evaluate_on_mesh(P: Polytope, x: Sequence[float], R: float, mesh: VolumeMesh,
                     threads: Optional[int] = None) -> float:
    """volht of B(x, R) on a frozen mesh; smooth in x and R"""
    x = _check_ball_args(P, x, R)
    integrator = SimplexIntegrator(_BallIntegrand(P, x, R), threads=threads)
    return integrator.integrate_fixed(mesh.cells, mesh.owners) / unit_ball_volume(P.dim)


def ball_volume_curve(P: Polytope, x: Optional[Sequence[float]], R_grid: Sequence[float],
                      tol: Optional[float] = None, rel_tol: float = 0.0) -> List[VolumeEstimate]:
    return [ball_volume(P, x, R, tol, rel_tol) for R in R_grid]


def ht_volume_of_subset(L: Polytope, K: Polytope, tol: Optional[float] = None,
                        rel_tol: float = 0.0, threads: Optional[int] = None) -> VolumeEstimate:
    """volht_L(K) = (1/omega_n) int_K |L^y| dy over the flag simplices of K"""
    n = L.dim
    if K.dim != n:
        raise NotStrictlyContained(f"dimension mismatch: {K.dim} vs {n}")
    margin = INCIDENCE_TOL * L.scale
    if np.any(L.slacks(K.vertices) <= margin):
        raise NotStrictlyContained("K is not contained in the interior of L")

    tol = default_tol(n) if tol is None else tol
    omega = unit_ball_volume(n)
    kernel = DensityKernel(L, L.vertex_centroid)
    apex = K.vertex_centroid
    roots = np.array([
        [K.face_point(f[j]) for j in range(n)] + [apex] for f in K.flags
    ])
    owners = np.arange(len(roots))

    integrator = SimplexIntegrator(lambda pts, _owners: kernel(pts), threads=threads)
    res = integrator.integrate(roots, owners, tol * omega, rel_tol)
    estimate = VolumeEstimate(res.value / omega, res.error / omega, res.evaluations, res.converged)
    if not res.converged:
        raise ToleranceNotReached(
            f"quadrature budget exhausted: error {estimate.abs_error_estimate:.3g} > tol {tol:.3g}",
            estimate,
        )
    return estimate
