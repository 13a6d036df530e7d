# modules/quadrature.py
# Adaptive simplex quadrature (Grundmann-Moeller rules, longest-edge bisection)

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, List, Optional

import numpy as np

from .config import (
    CHUNK_SIZE, ERROR_SAFETY, MAX_DEPTH, MAX_EVALUATIONS, MIN_ROUNDS, SPLIT_FRACTION, get_thread_count,
)

logger = logging.getLogger(__name__)

# integrand(points (K, d), owners (K,)) -> values (K,)
Integrand = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SimplexRule:
    """Interior rule on the reference simplex; weights sum to 1"""
    barycentric: np.ndarray  # (points, n + 1)
    weights: np.ndarray
    degree: int


@dataclass
class QuadratureResult:
    value: float
    error: float
    evaluations: int
    converged: bool
    cells: np.ndarray  # final mesh, (M, n + 1, d)
    owners: np.ndarray


def _compositions(total: int, parts: int):
    for combo in itertools.product(range(total + 1), repeat=parts):
        if sum(combo) == total:
            yield combo


@lru_cache(maxsize=None)
def grundmann_moeller(n: int, s: int = 2) -> SimplexRule:
    """Grundmann-Moeller rule of degree 2s + 1 on the n-simplex"""
    d = 2 * s + 1
    points: List[np.ndarray] = []
    weights: List[float] = []
    for i in range(s + 1):
        denom = d + n - 2 * i
        coef = (-1) ** i * 2.0 ** (-2 * s) * denom ** d / (math.factorial(i) * math.factorial(d + n - i))
        for beta in _compositions(s - i, n + 1):
            points.append((2 * np.array(beta, dtype=float) + 1) / denom)
            weights.append(coef * math.factorial(n))
    return SimplexRule(np.array(points), np.array(weights), d)


def simplex_volumes(cells: np.ndarray) -> np.ndarray:
    """Lebesgue volumes of a stack of simplices (M, n + 1, n)"""
    n = cells.shape[2]
    edges = cells[:, 1:, :] - cells[:, :1, :]
    return np.abs(np.linalg.det(edges)) / math.factorial(n)


def bisect_longest_edge(cells: np.ndarray):
    """Split every simplex at the midpoint of its longest edge"""
    M, k, _ = cells.shape
    diff = cells[:, :, None, :] - cells[:, None, :, :]
    lengths = np.einsum("mijd,mijd->mij", diff, diff)
    flat = np.argmax(lengths.reshape(M, k * k), axis=1)
    a, b = np.divmod(flat, k)
    rows = np.arange(M)
    mid = 0.5 * (cells[rows, a] + cells[rows, b])
    left = cells.copy()
    right = cells.copy()
    left[rows, b] = mid
    right[rows, a] = mid
    return left, right


def ordered_simplex_cells(n: int, T: float, m: int) -> np.ndarray:
    """Kuhn triangulation of {0 <= t_1 <= ... <= t_n <= T} on an m-step grid"""
    h = T / m
    cells = []
    for k in itertools.combinations_with_replacement(range(m), n):
        for perm in itertools.permutations(range(n)):
            pos = {axis: p for p, axis in enumerate(perm)}
            # within tied grid cells, later axes must have larger fractional part
            if any(k[i] == k[j] and pos[j] > pos[i] for i in range(n) for j in range(i + 1, n)):
                continue
            v = np.array(k, dtype=float) * h
            verts = [v.copy()]
            for axis in perm:
                v[axis] += h
                verts.append(v.copy())
            cells.append(verts)
    return np.array(cells)


class SimplexIntegrator:
    """Global adaptive integration over a stack of root simplices.

    Each leaf carries its rule value and the values on its two bisection
    halves; the halves' sum is the reported value and ERROR_SAFETY times the
    difference is the leaf's error estimate. The global estimate is also never
    below the change of the total over the last refinement round, and at least
    MIN_ROUNDS rounds run before convergence is declared. Each round splits
    the leaves holding the largest share of the error. Point evaluations are
    chunked and optionally threaded, and results are concatenated in leaf
    order so sums do not depend on the number of workers.
    """

    def __init__(self, integrand: Integrand, degree_index: int = 2,
                 threads: Optional[int] = None, max_evaluations: int = MAX_EVALUATIONS,
                 max_depth: int = MAX_DEPTH):
        self.integrand = integrand
        self.degree_index = degree_index
        self.threads = threads if threads is not None else get_thread_count()
        self.max_evaluations = max_evaluations
        self.max_depth = max_depth
        self.evaluations = 0

    def rule_values(self, cells: np.ndarray, owners: np.ndarray) -> np.ndarray:
        """Rule estimate of the integral over each cell"""
        if len(cells) == 0:
            return np.zeros(0)
        n = cells.shape[1] - 1
        rule = grundmann_moeller(n, self.degree_index)
        per_chunk = max(1, CHUNK_SIZE // len(rule.weights))
        starts = list(range(0, len(cells), per_chunk))

        def run(start: int) -> np.ndarray:
            c = cells[start:start + per_chunk]
            o = owners[start:start + per_chunk]
            pts = np.einsum("pk,mkd->mpd", rule.barycentric, c)
            vals = self.integrand(pts.reshape(-1, c.shape[2]), np.repeat(o, len(rule.weights)))
            return simplex_volumes(c) * (vals.reshape(len(c), -1) @ rule.weights)

        if self.threads > 1 and len(starts) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                parts = list(pool.map(run, starts))
        else:
            parts = [run(s) for s in starts]
        self.evaluations += len(cells) * len(rule.weights)
        return np.concatenate(parts)

    def integrate_fixed(self, cells: np.ndarray, owners: np.ndarray) -> float:
        """Rule applied on a given mesh, no refinement"""
        return float(np.sum(self.rule_values(cells, owners)))

    def integrate(self, roots: np.ndarray, owners: np.ndarray, tol: float,
                  rel_tol: float = 0.0) -> QuadratureResult:
        cells = np.asarray(roots, dtype=float)
        owners = np.asarray(owners, dtype=np.int64)
        depth = np.zeros(len(cells), dtype=np.int64)
        coarse = self.rule_values(cells, owners)
        left, right = bisect_longest_edge(cells)
        lv, rv = self.rule_values(left, owners), self.rule_values(right, owners)

        rounds = 0
        converged = False
        previous = float(np.sum(coarse))
        while True:
            fine = lv + rv
            err = ERROR_SAFETY * np.abs(coarse - fine)
            total = float(np.sum(fine))
            total_err = max(float(np.sum(err)), abs(total - previous))
            previous = total
            target = max(tol, rel_tol * abs(total))
            if total_err <= target and rounds >= MIN_ROUNDS:
                converged = True
                break
            refinable = depth < self.max_depth
            if self.evaluations >= self.max_evaluations or not refinable.any():
                break

            order = np.argsort(-np.where(refinable, err, -1.0), kind="stable")
            order = order[refinable[order]]
            cum = np.cumsum(err[order])
            take = int(np.searchsorted(cum, SPLIT_FRACTION * cum[-1])) + 1
            split = np.zeros(len(cells), dtype=bool)
            split[order[:take]] = True

            new_cells = np.concatenate([left[split], right[split]])
            new_owners = np.concatenate([owners[split], owners[split]])
            new_depth = np.concatenate([depth[split], depth[split]]) + 1
            new_coarse = np.concatenate([lv[split], rv[split]])
            new_left, new_right = bisect_longest_edge(new_cells)
            new_lv = self.rule_values(new_left, new_owners)
            new_rv = self.rule_values(new_right, new_owners)

            keep = ~split
            cells = np.concatenate([cells[keep], new_cells])
            owners = np.concatenate([owners[keep], new_owners])
            depth = np.concatenate([depth[keep], new_depth])
            coarse = np.concatenate([coarse[keep], new_coarse])
            left = np.concatenate([left[keep], new_left])
            right = np.concatenate([right[keep], new_right])
            lv = np.concatenate([lv[keep], new_lv])
            rv = np.concatenate([rv[keep], new_rv])
            rounds += 1
            logger.debug("round %d: %d leaves, estimate %.12g, error %.3g",
                         rounds, len(cells), total, total_err)

        mesh = np.concatenate([left, right])
        mesh_owners = np.concatenate([owners, owners])
        return QuadratureResult(total, total_err, self.evaluations, converged, mesh, mesh_owners)
