# modules/asymptotics.py
# Asymptotic coefficients c0, c1 of Funk ball volume growth

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .config import FIT_REL_TOL, INCIDENCE_TOL, PAIRING_TOL
from .errors import DegeneratePairing, NotCentrallySymmetric, WrongFlagCount
from .funk import ball_volume
from .geometry import FlagDecomposition, Polytope, complete_flip, flip
from .utils import unit_ball_volume

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AsymptoticCoeffs:
    """c0, c1 with the per-flag log terms that make up c1"""
    c0: float
    c1: float
    summands: List[Tuple[int, float]]


@dataclass(frozen=True)
class FlagContribution:
    """Own-flag part and the n neighbour corrections of one flag's bracket"""
    flag: int
    own: float
    corrections: Tuple[float, ...]


def _normalizer(n: int) -> float:
    # n / (n!)^2 == 1 / (n! (n-1)!)
    return 1.0 / (math.factorial(n) * math.factorial(n - 1))


def _vertex_of(P: Polytope, face_index: int) -> int:
    return next(iter(P.faces[face_index].vertices))


def flip_pairs(P: Polytope) -> np.ndarray:
    """For each flag: (facet number of (rf)_{n-1}, vertex index of f_0)"""
    return np.array([
        (P.facet_of_flag(complete_flip(P, f)), _vertex_of(P, f[0])) for f in P.flags
    ], dtype=np.int64)


def c0(P: Polytope) -> float:
    """|flags(P)| / (n!)^2"""
    return len(P.flags) / math.factorial(P.dim) ** 2


def _flip_log_terms(P: Polytope, x: np.ndarray) -> np.ndarray:
    pairs = flip_pairs(P)
    s_vertex = P.slacks(P.vertices[pairs[:, 1]])
    s_center = P.slacks(x)[0]
    k = pairs[:, 0]
    ratio = s_vertex[np.arange(len(pairs)), k] / s_center[k]
    if np.any(ratio <= PAIRING_TOL):
        bad = int(np.argmin(ratio))
        raise DegeneratePairing(f"flag {bad}: 1 - <q, v> = {ratio[bad]:.3g} is not positive")
    return np.log(ratio)


def c1_flip(P: Polytope) -> AsymptoticCoeffs:
    """c1 = n/(n!)^2 sum_f log(1 - <q((rf)_{n-1}), f_0>), at the origin"""
    P.dual_vertices()  # raises OriginNotInterior
    terms = _flip_log_terms(P, np.zeros(P.dim))
    c1 = _normalizer(P.dim) * float(np.sum(terms))
    return AsymptoticCoeffs(c0(P), c1, [(a, float(t)) for a, t in enumerate(terms)])


def c1_at_point(P: Polytope, x: Sequence[float]) -> float:
    """c1 for balls centered at x.

    1 - <q_x, f_0 - x> with q_x = q / (1 - <q, x>) is the slack ratio
    s(f_0) / s(x) of the paired facet, so no origin condition is needed.
    """
    x = P.require_interior(x)
    return _normalizer(P.dim) * float(np.sum(_flip_log_terms(P, x)))


# ---------------------------------------------------------------------------
# decomposition forms
# ---------------------------------------------------------------------------

class _Pairing:
    """L(F, G) = log(1 - <q(F), p(G)>) for a decomposition"""

    def __init__(self, P: Polytope, D: FlagDecomposition):
        self.P = P
        self.D = D

    def __call__(self, F: int, G: int) -> float:
        if G == self.P.full_face:
            return 0.0
        arg = 1.0 - float(self.D.dual_points[F] @ self.D.primal_points[G])
        if arg <= PAIRING_TOL:
            raise DegeneratePairing(f"1 - <q(F{F}), p(F{G})> = {arg:.3g} is not positive")
        return math.log(arg)


def c1_decomposed(P: Polytope, D: FlagDecomposition) -> float:
    """1/(n!(n-1)!) sum_f sum_i [L((r_i f)_i, f_i) - L((r_i f)_i, f_{i+1})]"""
    L = _Pairing(P, D)
    n = P.dim
    total = 0.0
    for f in P.flags:
        for i in range(n):
            g = flip(P, f, i)[i]
            total += L(g, f[i]) - L(g, f[i + 1])
    return _normalizer(n) * total


def c1_rearranged(P: Polytope, D: FlagDecomposition) -> float:
    """Same sum with the complete flip (rf)_i in place of (r_i f)_i"""
    L = _Pairing(P, D)
    n = P.dim
    total = 0.0
    for f in P.flags:
        rf = complete_flip(P, f)
        for i in range(n):
            total += L(rf[i], f[i]) - L(rf[i], f[i + 1])
    return _normalizer(n) * total


def c1_correction_terms(P: Polytope, D: FlagDecomposition) -> List[FlagContribution]:
    """Split each flag's bracket into its own-flag part and neighbour corrections.

    own = sum_i L(f_i, f_{i+1}) - sum_{i<=n-2} L(f_i, f_{i+2}); correction 0 is
    L(r_0 f_0, f_0) - L(r_0 f_0, f_1) and correction i >= 1 adds
    L(f_{i-1}, f_{i+1}) - L(f_{i-1}, f_i) to the same pattern. Every
    correction is nonnegative and the parts sum to the bracket.
    """
    L = _Pairing(P, D)
    n = P.dim
    out = []
    for a, f in enumerate(P.flags):
        own = sum(L(f[i], f[i + 1]) for i in range(n)) - sum(L(f[i], f[i + 2]) for i in range(n - 1))
        corrections = []
        for i in range(n):
            g = flip(P, f, i)[i]
            term = L(g, f[i]) - L(g, f[i + 1])
            if i >= 1:
                term += L(f[i - 1], f[i + 1]) - L(f[i - 1], f[i])
            corrections.append(term)
        out.append(FlagContribution(a, own, tuple(corrections)))
    return out


def equal_ratio_defect(q: np.ndarray, q2: np.ndarray, p: np.ndarray, p2: np.ndarray) -> float:
    """log[(1-<q,p>)(1-<q2,p2>)] - log[(1-<q,p2>)(1-<q2,p>)]

    Zero whenever p, p2 lie in a face G and q, q2 in the dual of a facet F of G.
    """
    return (math.log(1.0 - q @ p) + math.log(1.0 - q2 @ p2)
            - math.log(1.0 - q @ p2) - math.log(1.0 - q2 @ p))


# ---------------------------------------------------------------------------
# numeric extraction
# ---------------------------------------------------------------------------

def fit_volume_curve(n: int, R_grid: Sequence[float], scaled_volumes: Sequence[float]):
    """Least squares of omega_n V(R) on (R^n, R^(n-1), R^(n-2)); returns (coefs, residuals)"""
    R = np.asarray(R_grid, dtype=float)
    y = np.asarray(scaled_volumes, dtype=float)
    design = np.column_stack([R ** n, R ** (n - 1), R ** (n - 2)])
    coefs, *_ = np.linalg.lstsq(design, y, rcond=None)
    return coefs, y - design @ coefs


def fit_coeffs_numeric(P: Polytope, x: Optional[Sequence[float]], R_grid: Sequence[float],
                       tol: Optional[float] = None, rel_tol: float = FIT_REL_TOL) -> Tuple[float, float]:
    """Fitted (c0, c1) from quadrature volumes over an increasing grid"""
    grid = [float(r) for r in R_grid]
    if len(grid) < 3 or any(b <= a for a, b in zip(grid, grid[1:])) or grid[-1] < 15:
        raise ValueError("R grid must be increasing with at least 3 points and max >= 15")
    omega = unit_ball_volume(P.dim)
    values = [omega * ball_volume(P, x, R, tol, rel_tol).value for R in grid]
    coefs, residuals = fit_volume_curve(P.dim, grid, values)
    logger.info("fit over %d radii: c0=%.6g c1=%.6g (max residual %.3g)",
                len(grid), coefs[0], coefs[1], float(np.max(np.abs(residuals))))
    return float(coefs[0]), float(coefs[1])


def flag_equality_check(P: Polytope) -> bool:
    """For centrally symmetric P with 2^n n! flags: is <q((rf)_{n-1}), -f_0> = 1 for all f?"""
    n = P.dim
    if not P.is_centrally_symmetric():
        raise NotCentrallySymmetric("polytope is not centrally symmetric about the origin")
    expected = 2 ** n * math.factorial(n)
    if len(P.flags) != expected:
        raise WrongFlagCount(f"polytope has {len(P.flags)} flags, expected {expected}")
    q = P.dual_vertices()
    pairs = flip_pairs(P)
    values = np.einsum("ij,ij->i", q[pairs[:, 0]], -P.vertices[pairs[:, 1]])
    return bool(np.all(np.abs(values - 1.0) <= 1e3 * INCIDENCE_TOL))
