# modules/verification.py
# Invariant suite: cross-module identities checked on one polytope

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from .asymptotics import (
    c1_correction_terms, c1_decomposed, c1_flip, c1_rearranged, flag_equality_check,
)
from .errors import FunkVolError
from .funk import ball_volume, funk_ball, ht_volume_of_subset
from .geometry import (
    Polytope, apply_collineation, build_polytope, check_diamond, default_decomposition,
    euler_characteristic, flag_count_recursive, flag_simplex_volumes, flip, polar_dual,
    product_polytope, random_decomposition,
)
from .santalo import santalo_infinity, weighted_dual_centroid
from .utils import unit_ball_volume

logger = logging.getLogger(__name__)

SUITE_RADIUS = 1.0
DECOMPOSITION_TRIALS = 20
QUADRATURE_MAX_DIM = 3
PRODUCT_MAX_DIM = 2


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


class InvariantSuite:
    """Runs named checks and collects one CheckResult per check"""

    def __init__(self, P: Polytope, seed: int = 0, tol: Optional[float] = None):
        self.P = P
        self.rng = np.random.default_rng(seed)
        self.tol = tol
        self.results: List[CheckResult] = []

    def log(self, message: str) -> None:
        logger.info(message)

    def check(self, name: str, fn: Callable[[], Tuple[bool, str]]) -> None:
        try:
            passed, detail = fn()
        except FunkVolError as e:
            passed, detail = False, f"error[{e.stage}]: {e.message}"
        self.results.append(CheckResult(name, bool(passed), detail))
        self.log(f"{name}: {'pass' if passed else 'FAIL'} ({detail})")

    # ---- lattice -------------------------------------------------------

    def lattice(self) -> Tuple[bool, str]:
        P = self.P
        euler = euler_characteristic(P)
        expected = 1 - (-1) ** P.dim
        counted = flag_count_recursive(P)
        ok = check_diamond(P) and euler == expected and counted == len(P.flags)
        return ok, f"euler={euler} (expect {expected}), flags={len(P.flags)}, recursive={counted}"

    def flips(self) -> Tuple[bool, str]:
        P = self.P
        bad = 0
        for f in P.flags:
            for i in range(P.dim):
                g = flip(P, f, i)
                changed = [k for k in range(P.dim + 1) if g[k] != f[k]]
                if flip(P, g, i) != f or changed != [i]:
                    bad += 1
        return bad == 0, f"{bad} non-involutive flips"

    def bipolar(self) -> Tuple[bool, str]:
        P = self.P
        back = polar_dual(polar_dual(P))
        gaps = [np.min(np.linalg.norm(P.vertices - v, axis=1)) for v in back.vertices]
        worst = float(max(gaps)) / P.scale
        return len(back.vertices) == len(P.vertices) and worst <= 1e-9, f"max vertex gap {worst:.3g}"

    def tiling(self) -> Tuple[bool, str]:
        P = self.P
        total = float(np.sum(flag_simplex_volumes(P, default_decomposition(P))))
        rel = abs(total - P.volume) / P.volume
        return rel <= 1e-9, f"sum of flag simplices {total:.12g} vs |P| {P.volume:.12g}"

    # ---- asymptotic coefficients --------------------------------------

    def decomposition_independence(self) -> Tuple[bool, str]:
        P = self.P
        target = c1_flip(P).c1
        worst = abs(c1_decomposed(P, default_decomposition(P)) - target)
        for _ in range(DECOMPOSITION_TRIALS):
            D = random_decomposition(P, self.rng)
            worst = max(worst, abs(c1_decomposed(P, D) - target), abs(c1_rearranged(P, D) - target))
        return worst <= 1e-9, f"c1={target:.12g}, max deviation {worst:.3g}"

    def correction_positivity(self) -> Tuple[bool, str]:
        low = min(min(c.corrections) for c in c1_correction_terms(self.P, random_decomposition(self.P, self.rng)))
        return low >= -1e-12, f"smallest correction {low:.3g}"

    def linear_invariance(self) -> Tuple[bool, str]:
        P = self.P
        A = np.eye(P.dim) + 0.3 * self.rng.standard_normal((P.dim, P.dim))
        while abs(np.linalg.det(A)) < 0.1:
            A = np.eye(P.dim) + 0.3 * self.rng.standard_normal((P.dim, P.dim))
        before, after = c1_flip(P).c1, c1_flip(P.linear_image(A)).c1
        return abs(before - after) <= 1e-9, f"c1 {before:.12g} -> {after:.12g}"

    def flag_equality(self) -> Tuple[bool, str]:
        return flag_equality_check(self.P), "<q((rf)_(n-1)), -f_0> = 1 on every flag"

    def santalo_stationarity(self) -> Tuple[bool, str]:
        res = santalo_infinity(self.P)
        centroid = float(np.linalg.norm(weighted_dual_centroid(self.P, res.point)))
        return res.residual <= 1e-8 and centroid <= 1e-7, \
            f"s_inf={np.round(res.point, 10).tolist()} residual={res.residual:.3g} centroid={centroid:.3g}"

    # ---- volume identities --------------------------------------------

    def collineation_invariance(self) -> Tuple[bool, str]:
        P = self.P
        n = P.dim
        ref = ball_volume(P, None, SUITE_RADIUS, self.tol)
        while True:
            M = np.eye(n + 1) + 0.1 * self.rng.standard_normal((n + 1, n + 1))
            M[n, n] = 1.0
            denom = P.vertices @ M[n, :n] + M[n, n]
            if abs(np.linalg.det(M)) > 0.1 and np.min(denom) > 0.3:
                break
        ball = funk_ball(P, np.zeros(n), SUITE_RADIUS)
        image = ht_volume_of_subset(apply_collineation(P, M), apply_collineation(ball, M), self.tol)
        bound = 2 * (ref.abs_error_estimate + image.abs_error_estimate) + 1e-12
        diff = abs(ref.value - image.value)
        return diff <= max(bound, 2 * (self.tol or 0.0)), f"{ref.value:.10g} vs {image.value:.10g}"

    def duality_invariance(self) -> Tuple[bool, str]:
        P = self.P
        K = funk_ball(P, np.zeros(P.dim), SUITE_RADIUS)
        left = ht_volume_of_subset(P, K, self.tol)
        right = ht_volume_of_subset(polar_dual(K), polar_dual(P), self.tol)
        bound = 2 * (left.abs_error_estimate + right.abs_error_estimate) + 1e-12
        diff = abs(left.value - right.value)
        return diff <= max(bound, 2 * (self.tol or 0.0)), f"{left.value:.10g} vs {right.value:.10g}"

    def multiplicativity(self) -> Tuple[bool, str]:
        P = self.P
        n = P.dim
        interval = build_polytope([[-1.0], [1.0]])
        prod = product_polytope(P, interval)
        vp = ball_volume(P, None, SUITE_RADIUS, self.tol)
        vi = ball_volume(interval, None, SUITE_RADIUS)
        vq = ball_volume(prod, None, SUITE_RADIUS, self.tol)
        lhs = math.factorial(n + 1) * unit_ball_volume(n + 1) * vq.value
        rhs = (math.factorial(n) * unit_ball_volume(n) * vp.value) * (2.0 * vi.value)
        left_err = math.factorial(n + 1) * unit_ball_volume(n + 1) * vq.abs_error_estimate
        right_err = math.factorial(n) * unit_ball_volume(n) * 2.0 * (
            vp.abs_error_estimate * vi.value + vi.abs_error_estimate * vp.value)
        bound = 2 * (left_err + right_err) + 1e-12 * abs(lhs)
        return abs(lhs - rhs) <= bound, f"{lhs:.10g} vs {rhs:.10g}"

    # ---- driver ---------------------------------------------------------

    def run(self, quadrature: bool = True) -> List[CheckResult]:
        P = self.P
        self.check("lattice", self.lattice)
        self.check("flip_involution", self.flips)
        self.check("bipolar", self.bipolar)
        self.check("tiling", self.tiling)
        self.check("decomposition_independence", self.decomposition_independence)
        self.check("correction_positivity", self.correction_positivity)
        self.check("linear_invariance", self.linear_invariance)
        if P.is_centrally_symmetric() and len(P.flags) == 2 ** P.dim * math.factorial(P.dim):
            self.check("flag_equality", self.flag_equality)
        self.check("santalo_stationarity", self.santalo_stationarity)
        if quadrature and P.dim <= QUADRATURE_MAX_DIM:
            self.check("collineation_invariance", self.collineation_invariance)
            self.check("duality_invariance", self.duality_invariance)
            if P.dim <= PRODUCT_MAX_DIM:
                self.check("multiplicativity", self.multiplicativity)
        return self.results


def run_invariant_suite(P: Polytope, seed: int = 0, tol: Optional[float] = None,
                        quadrature: bool = True) -> List[CheckResult]:
    """Run every applicable invariant check; P is recentered if the origin is not interior"""
    if not P.origin_interior():
        logger.info("origin not interior; recentering at the vertex centroid")
        P = P.translated(P.vertex_centroid)
    return InvariantSuite(P, seed, tol).run(quadrature)
