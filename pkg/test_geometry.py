# test_geometry.py
# Face lattices, flags, flips, decompositions and polar duals

import os
import sys

import numpy as np
import pytest

current_dir = os.path.dirname(os.path.abspath(__file__))
if current_dir not in sys.path:
    sys.path.insert(0, current_dir)

from modules.errors import DegenerateInput, EmptyInput, MapsThroughInfinity, PointNotInterior  # noqa: E402
from modules.families import cross_polytope, cube, regular_simplex  # noqa: E402
from modules.geometry import (  # noqa: E402
    apply_collineation, build_polytope, check_diamond, collineation_points, complete_flip,
    default_decomposition, enumerate_flags, euler_characteristic, flag_count_recursive,
    flag_simplex_volumes, flag_weights, flip, polar_dual, product_polytope, random_decomposition,
)
from test_data_generator import centered_triangle, make_rng, random_collineation, random_polytope  # noqa: E402


def test_square_lattice():
    """Square from (+-1, +-1): 4 vertices, 4 edges, 8 flags"""
    P = cube(2)
    assert P.face_counts() == (4, 4)
    assert check_diamond(P)
    assert len(enumerate_flags(P)) == 8
    print("✅ square lattice")


def test_interior_point_dropped():
    P = build_polytope([[1, 1], [1, -1], [-1, 1], [-1, -1], [0, 0]])
    assert len(P.vertices) == 4
    edge_point = build_polytope([[1, 1], [1, -1], [-1, 1], [-1, -1], [1, 0]])
    assert len(edge_point.vertices) == 4
    print("✅ non-extreme points dropped")


def test_cube_face_counts():
    P = cube(3)
    assert P.face_counts() == (8, 12, 6)
    assert len(P.flags) == 48
    assert euler_characteristic(P) == 2
    print("✅ 3-cube face counts")


def test_flag_counts():
    assert len(regular_simplex(2).flags) == 6
    assert len(regular_simplex(3).flags) == 24
    assert len(build_polytope([[-1.0], [1.0]]).flags) == 2
    assert len(cross_polytope(3).flags) == 48
    print("✅ flag counts")


def test_degenerate_inputs():
    with pytest.raises(DegenerateInput):
        build_polytope([[1, 0], [0, 1]])
    with pytest.raises(DegenerateInput):
        build_polytope([[0, 0], [1, 1], [2, 2], [3, 3]])
    with pytest.raises(EmptyInput):
        build_polytope([])
    print("✅ degenerate inputs rejected")


def test_random_lattices():
    rng = make_rng(11)
    for n, count in [(2, 8), (3, 10), (3, 12), (4, 12)]:
        P = random_polytope(rng, n, count)
        assert check_diamond(P)
        assert euler_characteristic(P) == 1 - (-1) ** n
        assert flag_count_recursive(P) == len(P.flags)
        assert flag_weights(P).sum() == len(P.flags)
    print("✅ random lattices satisfy diamond and Euler")


def test_flip_involution():
    rng = make_rng(3)
    for P in [cube(3), centered_triangle(), random_polytope(rng, 3, 9)]:
        for f in P.flags:
            for i in range(P.dim):
                g = flip(P, f, i)
                assert flip(P, g, i) == f
                assert [k for k in range(P.dim + 1) if g[k] != f[k]] == [i]
    print("✅ flips are involutions")


def test_square_vertex_flip():
    P = cube(2)
    f = P.flags[0]
    g = flip(P, f, 0)
    assert P.faces[g[0]].vertices | P.faces[f[0]].vertices == P.faces[f[1]].vertices
    with pytest.raises(ValueError):
        flip(P, f, 2)


def test_complete_flip_interval():
    P = build_polytope([[-1.0], [1.0]])
    for f in P.flags:
        g = complete_flip(P, f)
        assert P.faces[g[0]].vertices != P.faces[f[0]].vertices


def test_complete_flip_square_pairing():
    """Square: the facet of rf pairs with f_0 to -1"""
    P = cube(2)
    q = P.dual_vertices()
    for f in P.flags:
        k = P.facet_of_flag(complete_flip(P, f))
        v = P.face_point(f[0])
        assert q[k] @ v == pytest.approx(-1.0)
    print("✅ complete flip pairing on the square")


def test_complete_flip_triangle():
    P = centered_triangle()
    for f in P.flags:
        facet = P.faces[complete_flip(P, f)[1]]
        assert not P.faces[f[0]].vertices <= facet.vertices


def test_decomposition_tiling():
    rng = make_rng(5)
    for P in [cube(2), centered_triangle(), cube(3), random_polytope(rng, 3, 10)]:
        D = default_decomposition(P)
        assert np.allclose(D.primal_points[P.full_face], 0.0)
        vols = flag_simplex_volumes(P, D)
        assert np.all(vols > 0)
        assert vols.sum() == pytest.approx(P.volume, rel=1e-9)
        R = random_decomposition(P, rng)
        assert flag_simplex_volumes(P, R).sum() == pytest.approx(P.volume, rel=1e-9)
    square = flag_simplex_volumes(cube(2), default_decomposition(cube(2)))
    assert np.allclose(square, 4.0 / 8)
    print("✅ flag simplices tile")


def test_polar_dual_square():
    dual = polar_dual(cube(2))
    expected = {(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)}
    got = {tuple(np.round(v, 12) + 0.0) for v in dual.vertices}
    assert got == expected


def test_polar_dual_interval_at_point():
    P = build_polytope([[-1.0], [1.0]])
    dual = polar_dual(P, [0.5])
    assert sorted(dual.vertices[:, 0]) == pytest.approx([-2.0 / 3.0, 2.0])
    with pytest.raises(PointNotInterior):
        polar_dual(P, [1.0])


def test_bipolar():
    rng = make_rng(8)
    for P in [cube(3), centered_triangle(), random_polytope(rng, 3, 10)]:
        back = polar_dual(polar_dual(P))
        assert len(back.vertices) == len(P.vertices)
        for v in back.vertices:
            assert np.min(np.linalg.norm(P.vertices - v, axis=1)) <= 1e-9 * P.scale
    print("✅ bipolar")


def test_product_polytope():
    interval = build_polytope([[-1.0], [1.0]])
    P = product_polytope(interval, interval)
    assert len(P.flags) == 8
    assert P.volume == pytest.approx(4.0)


def test_collineation():
    P = cube(2)
    same = apply_collineation(P, np.eye(3))
    assert np.allclose(np.sort(same.vertices, axis=0), np.sort(P.vertices, axis=0))

    A = np.array([[2.0, 1.0], [0.0, 1.0]])
    M = np.eye(3)
    M[:2, :2] = A
    linear = apply_collineation(P, M)
    assert linear.volume == pytest.approx(abs(np.linalg.det(A)) * P.volume)

    rng = make_rng(2)
    g = random_collineation(rng, P)
    image = apply_collineation(P, g)
    assert len(image.vertices) == 4 and len(image.flags) == 8
    mapped = collineation_points(g, P.vertices)
    for v in image.vertices:
        assert np.min(np.linalg.norm(mapped - v, axis=1)) <= 1e-12

    bad = np.eye(3)
    bad[2, :2] = [2.0, 0.0]
    with pytest.raises(MapsThroughInfinity):
        apply_collineation(P, bad)
    print("✅ collineations")


def main():
    tests = [
        ("Square lattice", test_square_lattice),
        ("Non-extreme points", test_interior_point_dropped),
        ("Cube face counts", test_cube_face_counts),
        ("Flag counts", test_flag_counts),
        ("Degenerate inputs", test_degenerate_inputs),
        ("Random lattices", test_random_lattices),
        ("Flip involution", test_flip_involution),
        ("Square vertex flip", test_square_vertex_flip),
        ("Complete flip (interval)", test_complete_flip_interval),
        ("Complete flip (square)", test_complete_flip_square_pairing),
        ("Complete flip (triangle)", test_complete_flip_triangle),
        ("Decomposition tiling", test_decomposition_tiling),
        ("Polar dual (square)", test_polar_dual_square),
        ("Polar dual (interval)", test_polar_dual_interval_at_point),
        ("Bipolar", test_bipolar),
        ("Product", test_product_polytope),
        ("Collineation", test_collineation),
    ]
    print("🧪 Geometry Tests")
    print("=" * 50)
    results = []
    for name, fn in tests:
        try:
            fn()
            results.append((name, True))
        except Exception as e:
            print(f"❌ {name} failed: {e}")
            results.append((name, False))

    print("\n📊 Test Results Summary:")
    print("=" * 50)
    for name, ok in results:
        print(f"{name}: {'✅ PASS' if ok else '❌ FAIL'}")
    return all(ok for _, ok in results)


if __name__ == "__main__":
    sys.exit(0 if main() else 1)
