# modules/geometry.py
# Polytopes, face lattices, flags, flips and polar duals

import logging
import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .config import INCIDENCE_TOL, PAIRING_TOL
from .errors import (
    DegenerateInput, EmptyInput, MapsThroughInfinity, OriginNotInterior, PointNotInterior,
)

logger = logging.getLogger(__name__)

# A flag is the tuple of face indices (f_0, ..., f_n), entry i of dimension i
Flag = Tuple[int, ...]


@dataclass(frozen=True)
class Face:
    """Closed face of a polytope, identified by its vertex-index set"""
    index: int
    dim: int
    vertices: FrozenSet[int]
    facets: FrozenSet[int]  # facet numbers k whose hyperplane contains the face
    up: Tuple[int, ...]
    down: Tuple[int, ...]


@dataclass(frozen=True)
class FlagDecomposition:
    """Interior points p(F) of faces and q(F) of the dual faces F°.

    Both maps are keyed by primal face index; dual_points[F] lies in the
    relative interior of the dual face F°. primal_points[full face] is the origin.
    """
    primal_points: Dict[int, np.ndarray]
    dual_points: Dict[int, np.ndarray]


class Polytope:
    """Full-dimensional convex polytope with facets <a_k, x> <= b_k and face lattice"""

    def __init__(self, vertices: np.ndarray, normals: np.ndarray, offsets: np.ndarray,
                 faces: Sequence[Face]):
        self.vertices = np.array(vertices, dtype=float)
        self.normals = np.array(normals, dtype=float)
        self.offsets = np.array(offsets, dtype=float)
        self.faces: Tuple[Face, ...] = tuple(faces)
        for arr in (self.vertices, self.normals, self.offsets):
            arr.setflags(write=False)

        self.dim = self.vertices.shape[1]
        by_dim: Dict[int, List[int]] = {d: [] for d in range(-1, self.dim + 1)}
        for face in self.faces:
            by_dim[face.dim].append(face.index)
        self.faces_by_dim = {d: tuple(ix) for d, ix in by_dim.items()}
        self.empty_face = self.faces_by_dim[-1][0]
        self.full_face = self.faces_by_dim[self.dim][0]
        # facet number k <-> face index
        self.facet_faces: Tuple[int, ...] = tuple(
            sorted(self.faces_by_dim[self.dim - 1], key=lambda ix: min(self.faces[ix].facets))
        )
        self.facet_number = {ix: k for k, ix in enumerate(self.facet_faces)}

    def __repr__(self) -> str:
        return f"Polytope(dim={self.dim}, vertices={len(self.vertices)}, facets={len(self.offsets)})"

    # ---- metric helpers -------------------------------------------------

    @cached_property
    def scale(self) -> float:
        centered = self.vertices - self.vertices.mean(axis=0)
        return float(max(1.0, np.max(np.linalg.norm(centered, axis=1)), np.max(np.abs(self.vertices))))

    @property
    def facets(self) -> List[Tuple[np.ndarray, float]]:
        """(unit normal, offset) pairs with <a, x> <= b"""
        return [(self.normals[k], float(self.offsets[k])) for k in range(len(self.offsets))]

    @property
    def vertex_centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def slacks(self, points: np.ndarray) -> np.ndarray:
        """b_k - <a_k, y> for each point (rows) and facet (columns)"""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.offsets[None, :] - pts @ self.normals.T

    def contains(self, point: Sequence[float], strict: bool = True) -> bool:
        s = self.slacks(point)[0]
        tol = INCIDENCE_TOL * self.scale
        return bool(np.all(s > tol)) if strict else bool(np.all(s >= -tol))

    def require_interior(self, point: Sequence[float], what: str = "point") -> np.ndarray:
        y = np.asarray(point, dtype=float).reshape(-1)
        if y.shape != (self.dim,) or not self.contains(y):
            raise PointNotInterior(f"{what} {np.round(y, 12).tolist()} is not interior to the polytope")
        return y

    def origin_interior(self) -> bool:
        return bool(np.all(self.offsets > INCIDENCE_TOL * self.scale))

    def dual_vertices(self) -> np.ndarray:
        """Vertices q_k = a_k / b_k of the polar body; <q_k, x> = 1 on facet k"""
        if not self.origin_interior():
            raise OriginNotInterior("origin is not interior; the polar has no vertex form")
        return self.normals / self.offsets[:, None]

    @cached_property
    def volume(self) -> float:
        if self.dim == 1:
            return float(self.vertices.max() - self.vertices.min())
        return float(ConvexHull(self.vertices).volume)

    @cached_property
    def inradius(self) -> float:
        """Radius of the largest inscribed ball (Chebyshev radius)"""
        n = self.dim
        # maximize r subject to <a_k, c> + r <= b_k
        cost = np.zeros(n + 1)
        cost[-1] = -1.0
        A_ub = np.hstack([self.normals, np.ones((len(self.offsets), 1))])
        res = linprog(cost, A_ub=A_ub, b_ub=self.offsets,
                      bounds=[(None, None)] * n + [(0, None)], method="highs")
        if not res.success:
            raise DegenerateInput(f"inradius LP failed: {res.message}")
        return float(res.x[-1])

    def face_counts(self) -> Tuple[int, ...]:
        """Number of faces of each dimension 0..n-1"""
        return tuple(len(self.faces_by_dim[d]) for d in range(self.dim))

    def face_point(self, face_index: int) -> np.ndarray:
        """Vertex barycenter of a face"""
        ix = sorted(self.faces[face_index].vertices)
        return self.vertices[ix].mean(axis=0)

    def is_centrally_symmetric(self) -> bool:
        """True if -v is a vertex for every vertex v"""
        tol = 1e3 * INCIDENCE_TOL * self.scale
        for v in self.vertices:
            if np.min(np.linalg.norm(self.vertices + v, axis=1)) > tol:
                return False
        return True

    # ---- lattice views --------------------------------------------------

    @cached_property
    def flags(self) -> Tuple[Flag, ...]:
        return tuple(_enumerate_chains(self))

    def facet_of_flag(self, flag: Flag) -> int:
        """Facet number of flag[n-1]"""
        return self.facet_number[flag[self.dim - 1]]

    # ---- maps that keep the combinatorics ------------------------------

    def translated(self, x: Sequence[float]) -> "Polytope":
        """P - x"""
        x = np.asarray(x, dtype=float)
        return Polytope(self.vertices - x, self.normals, self.offsets - self.normals @ x, self.faces)

    def homothety(self, center: Sequence[float], lam: float) -> "Polytope":
        """center + lam (P - center)"""
        c = np.asarray(center, dtype=float)
        verts = c + lam * (self.vertices - c)
        offsets = (1.0 - lam) * (self.normals @ c) + lam * self.offsets
        return Polytope(verts, self.normals, offsets, self.faces)

    def linear_image(self, A: np.ndarray) -> "Polytope":
        """A P for invertible A"""
        A = np.asarray(A, dtype=float)
        if abs(np.linalg.det(A)) < 1e-14:
            raise DegenerateInput("linear map is singular")
        normals = self.normals @ np.linalg.inv(A)
        norms = np.linalg.norm(normals, axis=1)
        return Polytope(self.vertices @ A.T, normals / norms[:, None], self.offsets / norms, self.faces)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def build_polytope(vertices: Sequence[Sequence[float]]) -> Polytope:
    """Convex hull of the points with its complete face lattice"""
    pts = np.asarray(vertices, dtype=float)
    if pts.size == 0:
        raise EmptyInput("no vertices given")
    if pts.ndim != 2:
        raise DegenerateInput("vertices must be a list of equal-length coordinate lists")
    if not np.all(np.isfinite(pts)):
        raise DegenerateInput("vertices contain non-finite coordinates")

    n = pts.shape[1]
    if len(pts) < n + 1:
        raise DegenerateInput(f"need at least {n + 1} points in dimension {n}, got {len(pts)}")
    scale = max(1.0, float(np.max(np.abs(pts))))
    if np.linalg.matrix_rank(pts[1:] - pts[0], tol=INCIDENCE_TOL * scale) < n:
        raise DegenerateInput(f"points do not span a {n}-dimensional polytope")

    if n == 1:
        return _build_interval(pts)

    try:
        hull = ConvexHull(pts)
    except QhullError as e:
        raise DegenerateInput(f"hull computation failed: {e}") from e

    candidates = pts[np.sort(hull.vertices)]
    normals, offsets, facet_sets = _merge_facets(candidates, hull.equations, scale)

    # drop candidates lying on fewer than n independent facet hyperplanes
    extreme = []
    for i in range(len(candidates)):
        rows = [k for k, s in enumerate(facet_sets) if i in s]
        if rows and np.linalg.matrix_rank(normals[rows], tol=1e-9) == n:
            extreme.append(i)
    if len(extreme) < len(candidates):
        logger.debug("dropping %d non-extreme hull points", len(candidates) - len(extreme))
        candidates = candidates[extreme]
        normals, offsets, facet_sets = _merge_facets(candidates, hull.equations, scale)

    faces = _face_lattice(n, len(candidates), facet_sets)
    # facet k of the lattice is the k-th sorted facet set
    return Polytope(candidates, normals, offsets, faces)


def _build_interval(pts: np.ndarray) -> Polytope:
    lo, hi = float(pts.min()), float(pts.max())
    facet_sets = [frozenset({0}), frozenset({1})]
    faces = _face_lattice(1, 2, facet_sets)
    return Polytope(np.array([[lo], [hi]]), np.array([[-1.0], [1.0]]), np.array([-lo, hi]), faces)


def _merge_facets(points: np.ndarray, equations: np.ndarray,
                  scale: float) -> Tuple[np.ndarray, np.ndarray, List[FrozenSet[int]]]:
    """Group Qhull's triangulated facets into true facets by vertex incidence"""
    n = points.shape[1]
    tol = INCIDENCE_TOL * scale
    found: Dict[FrozenSet[int], Tuple[np.ndarray, float]] = {}
    for eq in equations:
        a, b = eq[:n], -eq[n]
        norm = np.linalg.norm(a)
        a, b = a / norm, b / norm
        on = frozenset(np.nonzero(np.abs(points @ a - b) <= tol)[0].tolist())
        if len(on) < n or on in found:
            continue
        span = points[sorted(on)] - points[min(on)]
        if np.linalg.matrix_rank(span, tol=tol) != n - 1:
            continue
        found[on] = (a, b)

    keys = sorted(found, key=lambda s: tuple(sorted(s)))
    normals = np.array([found[k][0] for k in keys])
    offsets = np.array([found[k][1] for k in keys])
    return normals, offsets, keys


def _face_lattice(n: int, n_vertices: int, facet_sets: List[FrozenSet[int]]) -> List[Face]:
    """All faces as intersections of facets, from the top down"""
    full = frozenset(range(n_vertices))
    levels: Dict[int, set] = {n: {full}, n - 1: set(facet_sets)}
    down_sets: Dict[FrozenSet[int], List[FrozenSet[int]]] = {full: list(facet_sets)}

    for k in range(n - 1, 0, -1):
        levels[k - 1] = set()
        for face in levels[k]:
            cuts = {face & g for g in facet_sets if not face <= g}
            cuts.discard(frozenset())
            maximal = [c for c in cuts if not any(c < other for other in cuts)]
            down_sets[face] = maximal
            levels[k - 1].update(maximal)

    empty: FrozenSet[int] = frozenset()
    levels[-1] = {empty}
    for v in levels[0]:
        down_sets[v] = [empty]
    down_sets[empty] = []

    ordered: List[Tuple[int, FrozenSet[int]]] = []
    for d in range(-1, n + 1):
        for s in sorted(levels[d], key=lambda s: tuple(sorted(s))):
            ordered.append((d, s))
    index = {s: i for i, (_, s) in enumerate(ordered)}

    ups: Dict[int, List[int]] = {i: [] for i in range(len(ordered))}
    for d, s in ordered:
        for sub in down_sets[s]:
            ups[index[sub]].append(index[s])

    faces = []
    for i, (d, s) in enumerate(ordered):
        on_facets = frozenset(k for k, g in enumerate(facet_sets) if s <= g) if d < n else frozenset()
        faces.append(Face(
            index=i,
            dim=d,
            vertices=s,
            facets=on_facets,
            up=tuple(sorted(ups[i])),
            down=tuple(sorted(index[sub] for sub in down_sets[s])),
        ))
    return faces


# ---------------------------------------------------------------------------
# flags
# ---------------------------------------------------------------------------

def _enumerate_chains(P: Polytope) -> List[Flag]:
    flags: List[Flag] = []

    def descend(chain: List[int]) -> None:
        face = P.faces[chain[-1]]
        if face.dim == 0:
            flags.append(tuple(reversed(chain)))
            return
        for sub in face.down:
            descend(chain + [sub])

    descend([P.full_face])
    return flags


def enumerate_flags(P: Polytope) -> List[Flag]:
    """Every maximal chain f_0 < f_1 < ... < f_n exactly once"""
    return list(P.flags)


def flag_count_recursive(P: Polytope) -> int:
    """|flags(P)| as the sum over facets of their flag counts"""
    memo: Dict[int, int] = {}

    def count(ix: int) -> int:
        face = P.faces[ix]
        if face.dim == 0:
            return 1
        if ix not in memo:
            memo[ix] = sum(count(sub) for sub in face.down)
        return memo[ix]

    return count(P.full_face)


def flag_weights(P: Polytope) -> np.ndarray:
    """Number of flags through each facet, indexed by facet number"""
    counts = Counter(P.facet_of_flag(f) for f in P.flags)
    return np.array([counts.get(k, 0) for k in range(len(P.offsets))], dtype=float)


def flip(P: Polytope, flag: Flag, i: int) -> Flag:
    """r_i: swap the i-face for the other face between flag[i-1] and flag[i+1]"""
    if not 0 <= i < P.dim:
        raise ValueError(f"flip index {i} outside 0..{P.dim - 1}")
    upper = P.faces[flag[i + 1]]
    if i == 0:
        options = [g for g in upper.down if g != flag[0]]
    else:
        lower = flag[i - 1]
        options = [g for g in upper.down if g != flag[i] and lower in P.faces[g].down]
    if len(options) != 1:
        raise DegenerateInput(f"diamond property fails at position {i} of flag {flag}")
    out = list(flag)
    out[i] = options[0]
    return tuple(out)


def complete_flip(P: Polytope, flag: Flag) -> Flag:
    """r = r_{n-1} o ... o r_0, r_0 applied first"""
    for i in range(P.dim):
        flag = flip(P, flag, i)
    return flag


def check_diamond(P: Polytope) -> bool:
    """Exactly two faces between any F < F' with dim F' = dim F + 2"""
    for face in P.faces:
        if face.dim > P.dim - 2:
            continue
        middles: Counter = Counter()
        for mid in face.up:
            for top in P.faces[mid].up:
                middles[top] += 1
        if any(c != 2 for c in middles.values()):
            return False
    return True


def euler_characteristic(P: Polytope) -> int:
    """Alternating face count sum over dimensions 0..n-1"""
    return sum((-1) ** i * c for i, c in enumerate(P.face_counts()))


# ---------------------------------------------------------------------------
# decompositions
# ---------------------------------------------------------------------------

def default_decomposition(P: Polytope) -> FlagDecomposition:
    """Vertex barycenters for faces and dual faces, p(P) at the origin"""
    q = P.dual_vertices()
    primal: Dict[int, np.ndarray] = {}
    dual: Dict[int, np.ndarray] = {}
    for face in P.faces:
        if face.dim < 0:
            continue
        if face.dim == P.dim:
            primal[face.index] = np.zeros(P.dim)
            continue
        primal[face.index] = P.face_point(face.index)
        dual[face.index] = q[sorted(face.facets)].mean(axis=0)
    return FlagDecomposition(primal, dual)


def random_decomposition(P: Polytope, rng: np.random.Generator) -> FlagDecomposition:
    """Random relative-interior points (Dirichlet weights) for faces and dual faces"""
    q = P.dual_vertices()
    primal: Dict[int, np.ndarray] = {}
    dual: Dict[int, np.ndarray] = {}
    for face in P.faces:
        if face.dim < 0:
            continue
        if face.dim == P.dim:
            primal[face.index] = np.zeros(P.dim)
            continue
        verts = P.vertices[sorted(face.vertices)]
        primal[face.index] = rng.dirichlet(np.ones(len(verts))) @ verts
        duals = q[sorted(face.facets)]
        dual[face.index] = rng.dirichlet(np.ones(len(duals))) @ duals
    return FlagDecomposition(primal, dual)


def flag_simplex_volumes(P: Polytope, D: FlagDecomposition) -> np.ndarray:
    """Volumes of conv{p(f_0), ..., p(f_n)} in flag order"""
    n = P.dim
    vols = []
    for f in P.flags:
        M = np.array([D.primal_points[f[j]] for j in range(n)])
        vols.append(abs(np.linalg.det(M)) / math.factorial(n))
    return np.array(vols)


# ---------------------------------------------------------------------------
# derived polytopes
# ---------------------------------------------------------------------------

def polar_dual(P: Polytope, x: Optional[Sequence[float]] = None) -> Polytope:
    """P^x = (P - x)°, vertices w / (1 - <w, x>) for the dual vertices w"""
    w = P.dual_vertices()
    x = np.zeros(P.dim) if x is None else np.asarray(x, dtype=float)
    denom = 1.0 - w @ x
    if np.any(denom <= PAIRING_TOL):
        raise PointNotInterior(f"point {np.round(x, 12).tolist()} is not interior to the polytope")
    return build_polytope(w / denom[:, None])


def product_polytope(K: Polytope, L: Polytope) -> Polytope:
    """Cartesian product K x L"""
    verts = [np.concatenate([u, v]) for u in K.vertices for v in L.vertices]
    return build_polytope(verts)


def apply_collineation(P: Polytope, M: np.ndarray) -> Polytope:
    """Image under x -> (A x + b) / (<c, x> + d), M = [[A, b], [c, d]]"""
    n = P.dim
    M = np.asarray(M, dtype=float)
    if M.shape != (n + 1, n + 1):
        raise DegenerateInput(f"collineation must be {n + 1}x{n + 1}, got {M.shape}")
    if abs(np.linalg.det(M)) < 1e-14:
        raise DegenerateInput("collineation matrix is singular")
    A, b, c, d = M[:n, :n], M[:n, n], M[n, :n], M[n, n]
    denom = P.vertices @ c + d
    if np.any(denom <= PAIRING_TOL):
        raise MapsThroughInfinity("a vertex maps to or through the hyperplane at infinity")
    return build_polytope((P.vertices @ A.T + b) / denom[:, None])


def collineation_points(M: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Apply the projective map of M to an array of points"""
    M = np.asarray(M, dtype=float)
    n = M.shape[0] - 1
    pts = np.atleast_2d(points)
    denom = pts @ M[n, :n] + M[n, n]
    return (pts @ M[:n, :n].T + M[:n, n]) / denom[:, None]
