# modules/families.py
# Reference families: Hanner polytopes, the simplex recursion and exact polygon formulas

import itertools
import logging
import math
import re
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.spatial import ConvexHull, QhullError

from .config import MAX_HANNER_DIMENSION, ODE_TOL, PARALLEL_EDGE_ANGLE, POLYGON_PAIRING_TOL
from .errors import (
    DegenerateInput, DegeneratePairing, DimensionTooLarge, NonpositiveRadius, OriginNotInterior,
    ParseError, ToleranceNotReached,
)
from .geometry import Polytope, build_polytope, polar_dual, product_polytope
from .utils import log_ratio_over_difference, unit_ball_volume

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# named polytopes
# ---------------------------------------------------------------------------

def cube(n: int) -> Polytope:
    """[-1, 1]^n"""
    return build_polytope(list(itertools.product((-1.0, 1.0), repeat=n)))


def cross_polytope(n: int) -> Polytope:
    """conv{+-e_i}"""
    eye = np.eye(n)
    return build_polytope(np.vstack([eye, -eye]))


def regular_simplex(n: int) -> Polytope:
    """Regular simplex with barycenter at the origin and unit circumradius"""
    centered = np.eye(n + 1) - 1.0 / (n + 1)
    _, _, vt = np.linalg.svd(centered)
    coords = centered @ vt[:n].T
    return build_polytope(coords / np.linalg.norm(coords, axis=1, keepdims=True))


def regular_polygon_vertices(m: int, radius: float = 1.0, phase: float = 0.0) -> np.ndarray:
    k = np.arange(m)
    angles = phase + 2.0 * math.pi * k / m
    return radius * np.column_stack([np.cos(angles), np.sin(angles)])


def regular_polygon(m: int, radius: float = 1.0, phase: float = 0.0) -> Polytope:
    return build_polytope(regular_polygon_vertices(m, radius, phase))


def regular_polygon_c1(m: int) -> float:
    """c1 of the centered regular m-gon, 2m log(2 sin(pi/m))"""
    return 2 * m * math.log(2.0 * math.sin(math.pi / m))


# ---------------------------------------------------------------------------
# Hanner polytopes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    @property
    def dim(self) -> int:
        return 1


@dataclass(frozen=True)
class Product:
    parts: Tuple["HannerSpec", ...]

    @property
    def dim(self) -> int:
        return sum(p.dim for p in self.parts)


@dataclass(frozen=True)
class Polar:
    inner: "HannerSpec"

    @property
    def dim(self) -> int:
        return self.inner.dim


HannerSpec = Union[Segment, Product, Polar]

_TOKEN = re.compile(r"\s*(?:([A-Za-z_]+)|(.))")


def _tokenize(text: str) -> List[str]:
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            break
        tokens.append((m.group(1) or m.group(2)).lower())
        pos = m.end()
    return tokens


def parse_hanner(text: str) -> HannerSpec:
    """Parse 'segment', 'product(a, b, ...)' and 'polar(a)' expressions"""
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty Hanner expression")
    pos = 0

    def expect(tok: str) -> None:
        nonlocal pos
        if pos >= len(tokens) or tokens[pos] != tok:
            found = tokens[pos] if pos < len(tokens) else "end of input"
            raise ParseError(f"expected '{tok}' in Hanner expression, found '{found}'")
        pos += 1

    def node() -> HannerSpec:
        nonlocal pos
        if pos >= len(tokens):
            raise ParseError("unexpected end of Hanner expression")
        name = tokens[pos]
        pos += 1
        if name in ("segment", "interval"):
            return Segment()
        if name == "polar":
            expect("(")
            inner = node()
            expect(")")
            return Polar(inner)
        if name == "product":
            expect("(")
            parts = [node()]
            while pos < len(tokens) and tokens[pos] == ",":
                pos += 1
                parts.append(node())
            expect(")")
            return Product(tuple(parts))
        raise ParseError(f"unknown Hanner term '{name}'")

    spec = node()
    if pos != len(tokens):
        raise ParseError(f"trailing input in Hanner expression: '{''.join(tokens[pos:])}'")
    return spec


def hanner_build(spec: HannerSpec) -> Polytope:
    """Explicit vertices of a Hanner polytope"""
    if spec.dim > MAX_HANNER_DIMENSION:
        raise DimensionTooLarge(f"Hanner dimension {spec.dim} exceeds {MAX_HANNER_DIMENSION}")
    if isinstance(spec, Segment):
        return build_polytope([[-1.0], [1.0]])
    if isinstance(spec, Polar):
        return polar_dual(hanner_build(spec.inner))
    result = hanner_build(spec.parts[0])
    for part in spec.parts[1:]:
        result = product_polytope(result, hanner_build(part))
    return result


def hanner_ball_volume(n: int, R: float) -> float:
    """volht of the radius-R ball about the center of any n-dim Hanner polytope"""
    if n < 1:
        raise ValueError(f"dimension must be at least 1, got {n}")
    if not R > 0:
        raise NonpositiveRadius(f"radius must be positive, got {R}")
    # log(2e^R - 1) = R + log(1 + lam)
    log_term = R + math.log1p(-math.expm1(-R))
    return 2 ** n / (math.factorial(n) * unit_ball_volume(n)) * log_term ** n


# ---------------------------------------------------------------------------
# simplex recursion
# ---------------------------------------------------------------------------

def to_ht_volume(V: float, n: int) -> float:
    """omega_n-scaled volume -> Holmes-Thompson volume"""
    return V / unit_ball_volume(n)


def from_ht_volume(volht: float, n: int) -> float:
    return volht * unit_ball_volume(n)


def _simplex_v1(R):
    # 2 log(2e^R - 1)
    return 2.0 * (R + np.log1p(-np.expm1(-R)))


def _radius_shift(n: int, R):
    """log(1 + 1/n - e^-R / n), the argument shift of the recursion"""
    return np.log1p(-np.expm1(-R) / n)


class SimplexVolumeSolver:
    """omega_n volht of Funk balls about the barycenter of a simplex.

    V_1 is closed form; V_n solves V_n' = (n+1)/n / (1 - e^-R/(n+1)) V_{n-1}(R + shift)
    from V_n(0) = 0. Dense solutions are kept per dimension and re-solved
    when a request reaches past the stored range.
    """

    def __init__(self, tol: float = ODE_TOL):
        self.tol = tol
        self._solutions: Dict[int, Tuple[float, object]] = {}

    def _solve(self, n: int, R_max: float) -> None:
        lower_max = R_max + math.log1p(1.0 / n)
        self._ensure(n - 1, lower_max)
        if n - 1 == 1:
            lower = _simplex_v1
        else:
            _, sol = self._solutions[n - 1]

            def lower(R):
                return sol(R)[0]

        def rhs(R, V):
            return [(n + 1) / n / (1.0 - math.exp(-R) / (n + 1)) * lower(R + _radius_shift(n, R))]

        res = solve_ivp(rhs, (0.0, R_max), [0.0], method="RK45", rtol=self.tol,
                        atol=self.tol * 1e-10, dense_output=True)
        if not res.success:
            raise ToleranceNotReached(f"simplex recursion failed in dimension {n}: {res.message}")
        logger.debug("simplex dimension %d solved on [0, %.4g] in %d steps", n, R_max, len(res.t))
        self._solutions[n] = (R_max, res.sol)

    def _ensure(self, n: int, R_max: float) -> None:
        if n == 1:
            return
        stored = self._solutions.get(n)
        if stored is None or stored[0] < R_max:
            self._solve(n, R_max)

    def volume(self, n: int, R: float) -> float:
        if n < 1:
            raise ValueError(f"dimension must be at least 1, got {n}")
        if not R > 0:
            raise NonpositiveRadius(f"radius must be positive, got {R}")
        if n == 1:
            return float(_simplex_v1(R))
        self._ensure(n, R)
        _, sol = self._solutions[n]
        return float(sol(R)[0])

    def curve(self, n: int, R_grid: Sequence[float]) -> np.ndarray:
        grid = np.asarray(R_grid, dtype=float)
        if len(grid):
            self._ensure(n, float(np.max(grid)))
        return np.array([self.volume(n, R) for R in grid])


def simplex_volume_ode(n: int, R: float, tol: float = ODE_TOL) -> float:
    """V_n(R) = omega_n volht(B(barycenter, R)) for an n-simplex"""
    return SimplexVolumeSolver(tol).volume(n, R)


@dataclass(frozen=True)
class SimplexAsymptotics:
    """V_n ~ small_leading R^n + small_next R^(n+1) near 0 and large_leading R^n + large_next R^(n-1) at infinity"""
    small_leading: float
    small_next: float
    large_leading: float
    large_next: float


def simplex_asymptotics(n: int) -> SimplexAsymptotics:
    fact = math.factorial(n)
    small = (n + 1) ** (n + 1) / fact ** 2
    large = math.factorial(n + 1) / fact ** 2
    return SimplexAsymptotics(small, -0.5 * n * small, large, large * n * math.log(n + 1))


# ---------------------------------------------------------------------------
# polygons
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Polygon:
    """Vertices counterclockwise; duals[i] spans the edge vertices[i-1], vertices[i]"""
    vertices: np.ndarray
    duals: np.ndarray

    @property
    def m(self) -> int:
        return len(self.vertices)


def _polygon_from_ordered(vertices: np.ndarray) -> Polygon:
    v = np.asarray(vertices, dtype=float)
    m = len(v)
    prev = np.roll(v, 1, axis=0)
    cross = prev[:, 0] * v[:, 1] - prev[:, 1] * v[:, 0]
    if np.any(cross <= POLYGON_PAIRING_TOL):
        raise OriginNotInterior("origin is not strictly inside the polygon")

    edges = v - prev
    nxt = np.roll(edges, -1, axis=0)
    sines = (edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]) / (
        np.linalg.norm(edges, axis=1) * np.linalg.norm(nxt, axis=1))
    if np.any(sines < PARALLEL_EDGE_ANGLE):
        raise DegenerateInput("consecutive polygon edges are (nearly) parallel or not convex")

    duals = np.array([np.linalg.solve(np.array([prev[i], v[i]]), np.ones(2)) for i in range(m)])
    pairing = np.concatenate([np.einsum("ij,ij->i", duals, v), np.einsum("ij,ij->i", duals, prev)])
    if np.max(np.abs(pairing - 1.0)) > POLYGON_PAIRING_TOL:
        raise DegeneratePairing("edge duals do not pair to 1 with their endpoints")
    return Polygon(v, duals)


def build_polygon(vertices: Sequence[Sequence[float]]) -> Polygon:
    """Counterclockwise polygon with its edge-line duals"""
    pts = np.asarray(vertices, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise DegenerateInput("a polygon needs at least 3 points in the plane")
    try:
        hull = ConvexHull(pts)
    except QhullError as e:
        raise DegenerateInput(f"hull computation failed: {e}") from e
    # 2-d hull vertices come counterclockwise
    return _polygon_from_ordered(pts[hull.vertices])


def polygon_from_polytope(P: Polytope) -> Polygon:
    if P.dim != 2:
        raise DegenerateInput(f"polygon formulas need dimension 2, got {P.dim}")
    return build_polygon(P.vertices)


def polygon_c1(Q: Polygon) -> float:
    """(1/2) sum of log(1 - <e_i, v_j>) over pairs with v_j adjacent to, not on, edge i.

    Pairs are counted once per neighbouring endpoint, so for a triangle each
    opposite pair appears twice.
    """
    m = Q.m
    total = 0.0
    for i in range(m):
        on_edge = {(i - 1) % m, i}
        for j in range(m):
            if j in on_edge:
                continue
            hits = sum(((j + k) % m) in on_edge for k in (-1, 1))
            if not hits:
                continue
            arg = 1.0 - float(Q.duals[i] @ Q.vertices[j])
            if arg <= POLYGON_PAIRING_TOL:
                raise DegeneratePairing(f"1 - <e_{i}, v_{j}> = {arg:.3g} is not positive")
            total += hits * math.log(arg)
    return 0.5 * total


def _check_lambda(lam: float) -> None:
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")


def _pair_blocks(Q: Polygon, lam: float):
    """D(e_j, v_i) = 1 - lam <e_j, v_i> for the four corners of every (i, j) block"""
    v, e = Q.vertices, Q.duals
    v1, e1 = np.roll(v, -1, axis=0), np.roll(e, -1, axis=0)
    A = v @ e.T          # <v_i, e_j>
    B = v1 @ e.T         # <v_{i+1}, e_j>
    C = v @ e1.T         # <v_i, e_{j+1}>
    D = v1 @ e1.T        # <v_{i+1}, e_{j+1}>
    return A, B, C, D


def polygon_dV_dlambda(Q: Polygon, lam: float) -> float:
    """d(omega_2 volht B(0, R)) / d lambda with lambda = 1 - e^-R.

    Each edge triangle (0, v_i, v_{i+1}) paired with dual edge (e_j, e_{j+1})
    contributes (lam/2) |v_i ^ v_{i+1}| |e_j ^ e_{j+1}| log(bc/ad) / (bc - ad)
    with a, b, c, d the values of 1 - lam <e, v> at the four corners.
    """
    _check_lambda(lam)
    v, e = Q.vertices, Q.duals
    v1, e1 = np.roll(v, -1, axis=0), np.roll(e, -1, axis=0)
    det_v = np.abs(v[:, 0] * v1[:, 1] - v[:, 1] * v1[:, 0])
    det_e = np.abs(e[:, 0] * e1[:, 1] - e[:, 1] * e1[:, 0])
    A, B, C, D = _pair_blocks(Q, lam)
    a, b, c, d = 1 - lam * A, 1 - lam * B, 1 - lam * C, 1 - lam * D
    kernel = log_ratio_over_difference(b * c, a * d)
    return float(0.5 * lam * np.sum(det_v[:, None] * det_e[None, :] * kernel))


def polygon_dV_dlambda_alt(Q: Polygon, lam: float) -> float:
    """The same derivative as |log(X/Y)| / |lam - N/M| summed over blocks"""
    _check_lambda(lam)
    A, B, C, D = _pair_blocks(Q, lam)
    M = A * D - B * C
    N = A + D - B - C
    X = (1 - lam * A) * (1 - lam * D)
    Y = (1 - lam * B) * (1 - lam * C)
    log_term = np.abs(np.log(X / Y))
    close = np.abs(X - Y) <= 1e-12 * Y
    safe_M = np.where(np.abs(M) > 0, M, 1.0)
    gap = np.abs(lam - N / safe_M)
    regular = log_term / np.where(close, 1.0, gap)
    # X == Y: the ratio tends to lam |M| / Y
    terms = np.where(close, lam * np.abs(M) / Y, regular)
    terms = np.where(np.abs(M) > 0, terms, 0.0)
    return float(0.5 * np.sum(terms))


def polygon_c1_gradient(Q: Polygon, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of c1 in each vertex coordinate, shape (m, 2)"""
    grad = np.zeros_like(Q.vertices)
    for i in range(Q.m):
        for k in range(2):
            up = Q.vertices.copy()
            down = Q.vertices.copy()
            up[i, k] += h
            down[i, k] -= h
            grad[i, k] = (polygon_c1(_polygon_from_ordered(up)) - polygon_c1(_polygon_from_ordered(down))) / (2 * h)
    return grad
