# test_data_generator.py
# Generate random but valid test inputs for the funkvol test scripts

import json
import os
import sys
from typing import List, Optional

import numpy as np

current_dir = os.path.dirname(os.path.abspath(__file__))
if current_dir not in sys.path:
    sys.path.insert(0, current_dir)

from modules.families import cube, hanner_build, parse_hanner, regular_polygon_vertices  # noqa: E402
from modules.geometry import Polytope, build_polytope  # noqa: E402


def make_rng(seed: int = 0) -> np.random.Generator:
    """Seeded generator shared by all test scripts"""
    return np.random.default_rng(seed)


def square() -> Polytope:
    return cube(2)


def centered_triangle() -> Polytope:
    """Triangle (1,0), (0,1), (-1,-1); barycenter at the origin"""
    return build_polytope([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]])


def asymmetric_triangle() -> Polytope:
    """Triangle conv{(3,0), (0,1), (0,-1)} with its vertex centroid at the origin"""
    pts = np.array([[3.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    return build_polytope(pts - pts.mean(axis=0))


def random_point_cloud(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    """Gaussian points, recentered so the origin is interior to their hull"""
    pts = rng.standard_normal((count, n))
    return pts - pts.mean(axis=0)


def random_polytope(rng: np.random.Generator, n: int, count: int) -> Polytope:
    """Hull of a random point cloud; retries until the origin is interior"""
    while True:
        P = build_polytope(random_point_cloud(rng, n, count))
        if P.origin_interior():
            return P


def random_polygon_vertices(rng: np.random.Generator, m: int, jitter: float = 0.25) -> np.ndarray:
    """m points on a perturbed circle in counterclockwise order, origin inside"""
    angles = np.sort(rng.uniform(0.0, 2 * np.pi, m))
    # keep gaps below pi so the origin stays interior
    while np.max(np.diff(np.concatenate([angles, [angles[0] + 2 * np.pi]]))) >= 0.9 * np.pi:
        angles = np.sort(rng.uniform(0.0, 2 * np.pi, m))
    radii = 1.0 + jitter * rng.uniform(-1.0, 1.0, m)
    return np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])


def random_polygon(rng: np.random.Generator, m: int) -> Polytope:
    """Random convex polygon with exactly m vertices"""
    while True:
        P = build_polytope(random_polygon_vertices(rng, m))
        if len(P.vertices) == m and P.origin_interior():
            return P


def _sign_flips(base: np.ndarray) -> np.ndarray:
    n = base.shape[1]
    signs = np.array(np.meshgrid(*[[-1.0, 1.0]] * n)).T.reshape(-1, n)
    return np.vstack([b * signs for b in base])


def random_unconditional_polytope(rng: np.random.Generator, n: int, count: int = 3) -> Polytope:
    """Hull of all sign flips of a few positive points (invariant under coordinate reflections)"""
    return build_polytope(_sign_flips(rng.uniform(0.2, 1.0, (count, n))))


def random_diagonal(rng: np.random.Generator, n: int) -> np.ndarray:
    return np.diag(rng.uniform(0.5, 2.0, n))


HANNER_EXPRESSIONS = {
    2: ["product(segment, segment)", "polar(product(segment, segment))"],
    3: ["product(segment, segment, segment)", "polar(product(segment, segment, segment))",
        "product(polar(product(segment, segment)), segment)",
        "polar(product(polar(product(segment, segment)), segment))"],
}


def random_diagonal_hanner(rng: np.random.Generator, n: int) -> Polytope:
    """A Hanner polytope of dimension 2 or 3 under a random positive diagonal map"""
    exprs = HANNER_EXPRESSIONS[n]
    spec = parse_hanner(exprs[int(rng.integers(len(exprs)))])
    return hanner_build(spec).linear_image(random_diagonal(rng, n))


def random_non_hanner_unconditional(rng: np.random.Generator, n: int) -> Polytope:
    """Unconditional body with vertices at all sign flips of the cyclic shifts of (1, u_1, ..)

    Every vertex is extreme, so the flag count is above 2^n n! and the body is
    a fixed distance away from any Hanner polytope.
    """
    point = np.concatenate([[1.0], rng.uniform(0.3, 0.6, n - 1)])
    base = np.array([np.roll(point, k) for k in range(n)])
    return build_polytope(_sign_flips(base)).linear_image(random_diagonal(rng, n))


def perturbed_regular_polygon(m: int, vertex: int = 0, amount: float = 0.05) -> np.ndarray:
    """Regular m-gon with one vertex pushed radially by a relative amount"""
    pts = regular_polygon_vertices(m)
    pts[vertex] *= 1.0 + amount
    return pts


def random_linear_map(rng: np.random.Generator, n: int, spread: float = 0.3) -> np.ndarray:
    """Well-conditioned matrix near the identity"""
    while True:
        A = np.eye(n) + spread * rng.standard_normal((n, n))
        if abs(np.linalg.det(A)) > 0.2:
            return A


def random_collineation(rng: np.random.Generator, P: Polytope, spread: float = 0.1) -> np.ndarray:
    """(n+1)x(n+1) projective map keeping P on the positive side of infinity"""
    n = P.dim
    while True:
        M = np.eye(n + 1) + spread * rng.standard_normal((n + 1, n + 1))
        M[n, n] = 1.0
        if abs(np.linalg.det(M)) > 0.1 and np.min(P.vertices @ M[n, :n] + 1.0) > 0.3:
            return M


def write_polytope_json(path: str, vertices: np.ndarray, center: Optional[List[float]] = None) -> str:
    """Write the CLI input schema to path and return the path"""
    data = {"vertices": np.asarray(vertices, dtype=float).tolist()}
    if center is not None:
        data["center"] = list(center)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh)
    return path


if __name__ == "__main__":
    rng = make_rng(7)
    print("🔍 Sample inputs")
    for name, P in [("square", square()), ("triangle", centered_triangle()),
                    ("random 3-polytope", random_polytope(rng, 3, 10)),
                    ("random heptagon", random_polygon(rng, 7)),
                    ("unconditional 3-polytope", random_unconditional_polytope(rng, 3))]:
        print(f"  {name}: {P!r}, flags={len(P.flags)}")
    print("✅ Test data generation complete")
