# test_families.py
# Hanner polytopes, the simplex recursion and the exact polygon formulas

import math
import os
import sys

import numpy as np
import pytest

current_dir = os.path.dirname(os.path.abspath(__file__))
if current_dir not in sys.path:
    sys.path.insert(0, current_dir)

from modules.asymptotics import c0, c1_flip, fit_volume_curve  # noqa: E402
from modules.errors import (  # noqa: E402
    DegenerateInput, DimensionTooLarge, NonpositiveRadius, OriginNotInterior, ParseError,
)
from modules.families import (  # noqa: E402
    Polar, Product, Segment, SimplexVolumeSolver, build_polygon, cube, hanner_ball_volume, hanner_build,
    parse_hanner, polygon_c1, polygon_c1_gradient, polygon_dV_dlambda, polygon_dV_dlambda_alt,
    polygon_from_polytope, regular_polygon, regular_polygon_c1, regular_polygon_vertices, regular_simplex,
    simplex_asymptotics, simplex_volume_ode,
)
from modules.funk import ball_volume  # noqa: E402
from modules.utils import radius_from_lam, unit_ball_volume  # noqa: E402
from test_data_generator import (  # noqa: E402
    make_rng, perturbed_regular_polygon, random_diagonal_hanner, random_non_hanner_unconditional, random_polygon,
    random_unconditional_polytope,
)

LOG3 = math.log(3.0)


# ---- Hanner polytopes ---------------------------------------------------

def test_parse_hanner():
    assert parse_hanner("segment") == Segment()
    assert parse_hanner("Interval") == Segment()
    spec = parse_hanner("polar(product(segment, segment, segment))")
    assert spec == Polar(Product((Segment(), Segment(), Segment())))
    assert spec.dim == 3
    assert parse_hanner(" product( polar(product(segment,segment)) , segment ) ").dim == 3
    print("✅ Hanner expressions parse")


@pytest.mark.parametrize("text", ["", "cube", "product(segment", "segment segment", "polar segment", "product()"])
def test_parse_hanner_errors(text):
    with pytest.raises(ParseError):
        parse_hanner(text)


def test_hanner_build():
    octahedron = hanner_build(parse_hanner("polar(product(segment, segment, segment))"))
    assert len(octahedron.vertices) == 6
    assert len(octahedron.flags) == 48
    square = hanner_build(parse_hanner("product(segment, segment)"))
    assert square.volume == pytest.approx(4.0)
    with pytest.raises(DimensionTooLarge):
        hanner_build(Product((Segment(),) * 6))
    print("✅ Hanner polytopes build")


def test_hanner_closed_form():
    assert hanner_ball_volume(1, math.log(2.0)) == pytest.approx(LOG3)
    assert hanner_ball_volume(2, math.log(2.0)) == pytest.approx(2.0 / math.pi * LOG3 ** 2)
    assert hanner_ball_volume(2, math.log(2.0)) == pytest.approx(0.768368, abs=1e-6)
    # (k+l)! omega_{k+l} V_{K x L} = k! omega_k V_K  l! omega_l V_L
    R = 1.7
    scaled = {n: math.factorial(n) * unit_ball_volume(n) * hanner_ball_volume(n, R) for n in (1, 2, 3)}
    assert scaled[3] == pytest.approx(scaled[1] * scaled[2])
    with pytest.raises(ValueError):
        hanner_ball_volume(0, 1.0)
    with pytest.raises(NonpositiveRadius):
        hanner_ball_volume(2, 0.0)


def test_hanner_large_radius():
    """Leading terms 2^n/(n! omega_n) R^n and n log 2 times that R^(n-1)"""
    R = 40.0
    for n in (1, 2, 3):
        lead = 2 ** n / (math.factorial(n) * unit_ball_volume(n))
        expected = lead * (R ** n + n * math.log(2.0) * R ** (n - 1))
        assert hanner_ball_volume(n, R) == pytest.approx(expected, rel=2e-3)


# ---- simplex recursion --------------------------------------------------

def test_simplex_dimension_one():
    for R in (0.5, 1.0, 3.0):
        assert simplex_volume_ode(1, R) == pytest.approx(2 * math.log(2 * math.exp(R) - 1))


@pytest.mark.parametrize("n", [2, 3])
def test_simplex_ode_matches_quadrature(n):
    P = regular_simplex(n)
    solver = SimplexVolumeSolver()
    for R in (0.5, 1.0, 2.0):
        direct = unit_ball_volume(n) * ball_volume(P, None, R, 1e-12, rel_tol=1e-6).value
        assert solver.volume(n, R) == pytest.approx(direct, rel=1e-4)
    print(f"✅ simplex recursion matches quadrature (n={n})")


def test_simplex_solver_extends_range():
    solver = SimplexVolumeSolver()
    early = solver.curve(3, [0.5, 1.0])
    late = solver.volume(3, 6.0)
    assert late > early[-1]
    assert solver.volume(3, 1.0) == pytest.approx(early[-1], rel=1e-8)
    assert np.all(np.diff(solver.curve(4, [0.5, 1.0, 2.0, 4.0])) > 0)
    with pytest.raises(NonpositiveRadius):
        solver.volume(2, -1.0)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_simplex_small_radius(n):
    asym = simplex_asymptotics(n)
    R = 1e-3
    V = simplex_volume_ode(n, R)
    assert V / R ** n == pytest.approx(asym.small_leading, rel=5e-3)
    assert (V - asym.small_leading * R ** n) / R ** (n + 1) == pytest.approx(asym.small_next, rel=5e-2)


@pytest.mark.parametrize("n", [2, 3])
def test_simplex_large_radius(n):
    asym = simplex_asymptotics(n)
    P = regular_simplex(n)
    assert asym.large_leading == pytest.approx(c0(P))
    assert asym.large_next == pytest.approx(c1_flip(P).c1)
    grid = [10.0, 12.0, 14.0, 16.0, 18.0, 20.0]
    coefs, _ = fit_volume_curve(n, grid, SimplexVolumeSolver().curve(n, grid))
    assert coefs[0] == pytest.approx(asym.large_leading, rel=1e-3)
    assert coefs[1] == pytest.approx(asym.large_next, rel=1e-2)
    print(f"✅ simplex large-R regime (n={n})")


# ---- polygons -----------------------------------------------------------

def test_polygon_orientation_and_duals():
    Q = build_polygon([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0], [0.0, 0.0]])
    assert Q.m == 4
    prev = np.roll(Q.vertices, 1, axis=0)
    cross = prev[:, 0] * Q.vertices[:, 1] - prev[:, 1] * Q.vertices[:, 0]
    assert np.all(cross > 0)
    assert np.allclose(np.einsum("ij,ij->i", Q.duals, Q.vertices), 1.0)
    assert np.allclose(np.einsum("ij,ij->i", Q.duals, prev), 1.0)
    with pytest.raises(OriginNotInterior):
        build_polygon([[1.0, 0.0], [2.0, 0.0], [1.5, 1.0]])
    with pytest.raises(DegenerateInput):
        build_polygon([[1.0, 0.0], [0.0, 1.0]])


def test_polygon_c1_matches_flag_sum():
    rng = make_rng(37)
    for trial in range(50):
        m = 3 + trial % 7
        P = random_polygon(rng, m)
        assert polygon_c1(polygon_from_polytope(P)) == pytest.approx(c1_flip(P).c1, abs=1e-9)
    print("✅ polygon c1 equals the flag-flip sum")


@pytest.mark.parametrize("m", [3, 4, 5, 6, 7, 8, 12])
def test_regular_polygon_c1(m):
    Q = polygon_from_polytope(regular_polygon(m))
    assert polygon_c1(Q) == pytest.approx(regular_polygon_c1(m), abs=1e-10)


def _volume_in_lambda(P, lam):
    return unit_ball_volume(2) * ball_volume(P, None, radius_from_lam(lam), 1e-12, rel_tol=1e-11).value


@pytest.mark.parametrize("m", [4, 6, 7])
def test_dV_dlambda_matches_differences(m):
    P = regular_polygon(m, phase=0.1) if m != 7 else random_polygon(make_rng(3), 7)
    Q = polygon_from_polytope(P)
    for lam in (0.3, 0.5, 0.9):
        step = 1e-3 * (1.0 - lam)
        diff = (_volume_in_lambda(P, lam + step) - _volume_in_lambda(P, lam - step)) / (2 * step)
        exact = polygon_dV_dlambda(Q, lam)
        assert exact == pytest.approx(diff, rel=1e-4)
        assert polygon_dV_dlambda_alt(Q, lam) == pytest.approx(exact, rel=1e-9)
    print(f"✅ exact dV/dlambda (m={m})")


def test_dV_dlambda_square():
    Q = polygon_from_polytope(cube(2))
    for lam in (0.1, 0.5, 0.95):
        L = math.log((1 + lam) / (1 - lam))
        assert polygon_dV_dlambda(Q, lam) == pytest.approx(8 * L / (1 - lam ** 2), rel=1e-10)
        assert polygon_dV_dlambda_alt(Q, lam) == pytest.approx(8 * L / (1 - lam ** 2), rel=1e-10)
    with pytest.raises(ValueError):
        polygon_dV_dlambda(Q, 1.0)
    with pytest.raises(ValueError):
        polygon_dV_dlambda_alt(Q, 0.0)


def test_dV_dlambda_forms_agree():
    rng = make_rng(44)
    for _ in range(10):
        Q = polygon_from_polytope(random_polygon(rng, int(rng.integers(3, 9))))
        lam = float(rng.uniform(0.05, 0.95))
        assert polygon_dV_dlambda_alt(Q, lam) == pytest.approx(polygon_dV_dlambda(Q, lam), rel=1e-9)


def test_regular_polygons_are_stationary():
    for m in (3, 5, 6, 8):
        Q = build_polygon(regular_polygon_vertices(m, radius=1.3, phase=0.2))
        assert np.linalg.norm(polygon_c1_gradient(Q)) <= 1e-6
    # affine images of regular polygons stay stationary
    A = np.array([[1.5, 0.4], [0.0, 0.8]])
    Q = build_polygon(regular_polygon_vertices(5) @ A.T)
    assert np.linalg.norm(polygon_c1_gradient(Q)) <= 1e-6
    print("✅ regular polygons are stationary")


def test_perturbed_polygon_not_stationary():
    for m in (4, 5):
        Q = build_polygon(perturbed_regular_polygon(m, amount=0.05))
        assert np.linalg.norm(polygon_c1_gradient(Q)) > 1e-3


# ---- unconditional bodies ----------------------------------------------

def _gap_to_hanner(P, R):
    """(volume - Hanner value, allowed slack) at radius R"""
    est = ball_volume(P, None, R)
    return est.value - hanner_ball_volume(P.dim, R), 2 * est.abs_error_estimate + 1e-12


def _is_hanner_count(P):
    return len(P.flags) == 2 ** P.dim * math.factorial(P.dim)


def test_diagonal_hanner_images_attain_bound():
    rng = make_rng(53)
    for n in (2, 3):
        for _ in range(3):
            P = random_diagonal_hanner(rng, n)
            for R in (0.5, 2.0):
                gap, slack = _gap_to_hanner(P, R)
                assert abs(gap) <= slack
    print("✅ diagonal images of Hanner bodies meet the bound")


def test_non_hanner_bodies_strictly_above():
    rng = make_rng(54)
    bodies = [random_non_hanner_unconditional(rng, 2) for _ in range(5)]
    bodies.append(random_non_hanner_unconditional(rng, 3))
    for P in bodies:
        assert not _is_hanner_count(P)
        for R in (0.5, 2.0):
            gap, slack = _gap_to_hanner(P, R)
            assert gap > slack
    print("✅ non-Hanner unconditional bodies lie strictly above")


@pytest.mark.slow
def test_unconditional_lower_bound():
    rng = make_rng(55)
    bodies = []
    for n, total in ((2, 100), (3, 20)):
        for k in range(total):
            kind = k % 4
            if kind < 2:
                P = random_unconditional_polytope(rng, n, count=int(rng.integers(1, 4 if n == 2 else 3)))
            elif kind == 2:
                P = random_diagonal_hanner(rng, n)
            else:
                P = random_non_hanner_unconditional(rng, n)
            bodies.append((P, kind))
    for P, kind in bodies:
        for R in (0.5, 1.0, 2.0, 5.0):
            gap, slack = _gap_to_hanner(P, R)
            assert gap >= -slack
            if _is_hanner_count(P):
                assert abs(gap) <= slack
            if kind == 3:
                assert gap > slack
    print("✅ unconditional bodies sit above the Hanner value")


def main():
    tests = [
        ("Parse Hanner", test_parse_hanner),
        ("Parse errors", lambda: test_parse_hanner_errors("product(segment")),
        ("Build Hanner", test_hanner_build),
        ("Hanner closed form", test_hanner_closed_form),
        ("Hanner large R", test_hanner_large_radius),
        ("Simplex n=1", test_simplex_dimension_one),
        ("Simplex ODE vs quadrature", lambda: test_simplex_ode_matches_quadrature(2)),
        ("Simplex solver range", test_simplex_solver_extends_range),
        ("Simplex small R", lambda: test_simplex_small_radius(3)),
        ("Simplex large R", lambda: test_simplex_large_radius(3)),
        ("Polygon duals", test_polygon_orientation_and_duals),
        ("Polygon c1", test_polygon_c1_matches_flag_sum),
        ("Regular polygon c1", lambda: test_regular_polygon_c1(5)),
        ("dV/dlambda", lambda: test_dV_dlambda_matches_differences(6)),
        ("dV/dlambda square", test_dV_dlambda_square),
        ("dV/dlambda forms", test_dV_dlambda_forms_agree),
        ("Stationary polygons", test_regular_polygons_are_stationary),
        ("Perturbed polygons", test_perturbed_polygon_not_stationary),
        ("Hanner images", test_diagonal_hanner_images_attain_bound),
        ("Non-Hanner bodies", test_non_hanner_bodies_strictly_above),
        ("Unconditional bound", test_unconditional_lower_bound),
    ]
    print("🧪 Reference Family Tests")
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
