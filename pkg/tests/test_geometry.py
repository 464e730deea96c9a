import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from svikit.geometry import (PolyCone, SumSet, Verdict, VPolytope,
                             ball_sup_dist, dist_many, enlargement_inclusion,
                             excess, hausdorff, orthant, project_dist)
from conftest import random_pointed_cone

SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# brute-force oracles
# ---------------------------------------------------------------------------

def brute_cone_distance(y, generators, grid=250, reach=5.0):
    """Minimum distance over a fine grid of nonnegative generator weights."""
    gens = np.asarray(generators, float)
    axes = [np.linspace(0.0, reach, grid)] * len(gens)
    mesh = np.meshgrid(*axes, indexing="ij")
    mus = np.column_stack([g.ravel() for g in mesh])
    pts = mus @ gens
    return float(np.min(np.linalg.norm(pts - np.asarray(y, float), axis=1)))


def test_project_dist_orthant_examples(plane_orthant):
    proj, d = project_dist([-1.0, -1.0], plane_orthant)
    assert np.allclose(proj, [0.0, 0.0])
    assert d == pytest.approx(SQRT2, abs=1e-12)

    proj, d = project_dist([2.0, 3.0], plane_orthant)
    assert np.allclose(proj, [2.0, 3.0])
    assert d == 0.0


def test_project_dist_wedge_matches_brute_force():
    wedge = PolyCone([[1.0, 1.0], [1.0, -1.0]])
    proj, d = project_dist([-1.0, 0.0], wedge)
    # oracle: fine grid over nonnegative coefficients
    oracle = brute_cone_distance([-1.0, 0.0], wedge.generators, grid=400, reach=3.0)
    assert oracle == pytest.approx(1.0, abs=2e-2)
    assert d == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(proj, [0.0, 0.0], atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_project_dist_idempotent(seed):
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 4))
    base = rng.standard_normal((int(rng.integers(1, 5)), m))
    cone = None
    if rng.random() < 0.7:
        try:
            cone = PolyCone(rng.standard_normal((int(rng.integers(1, 4)), m))
                            + rng.uniform(1.0, 2.0))
        except ValueError:
            cone = None  # degenerate draw (zero rays or the whole space)
    S = SumSet(VPolytope(base), cone)
    y = rng.standard_normal(m) * 3.0
    proj, _ = project_dist(y, S)
    _, d2 = project_dist(proj, S)
    assert d2 <= 1e-9


def test_excess_examples(plane_orthant):
    assert excess(VPolytope([[1, 1], [-1, 0]]), plane_orthant) == pytest.approx(1.0)
    assert excess(VPolytope([[1, 2], [3, 1]]), plane_orthant) == 0.0


def test_excess_enlargement_identity(plane_orthant):
    # exc(B(A, 0.5), C) = exc(A, C) + 0.5 via bisection on the target radius
    A = VPolytope([[1, 1], [-1, 0]])
    lo, hi = 0.0, 10.0
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if enlargement_inclusion(A, 0.5, plane_orthant, mid).holds:
            hi = mid
        else:
            lo = mid
    assert hi == pytest.approx(1.5, abs=1e-6)


def test_hausdorff_examples():
    A = VPolytope([[0.4, -0.3], [1.2, 2.0], [-0.5, 0.1]])
    assert hausdorff(A, A) == pytest.approx(0.0, abs=1e-12)
    assert hausdorff(VPolytope([[0, 0]]), VPolytope([[3, 4]])) == pytest.approx(5.0)


def test_hausdorff_segment_vs_point_dense_sampling():
    seg = VPolytope([[0.0, 0.0], [1.0, 0.0]])
    pt = VPolytope([[0.0, 1.0]])
    # oracle: dense sampling of the segment
    ts = np.linspace(0.0, 1.0, 20_001)
    samples = np.column_stack([ts, np.zeros_like(ts)])
    exc_ab = float(np.max(np.linalg.norm(samples - np.array([0.0, 1.0]), axis=1)))
    exc_ba = float(np.min(np.linalg.norm(samples - np.array([0.0, 1.0]), axis=1)))
    assert exc_ab == pytest.approx(SQRT2, abs=1e-8)
    assert exc_ba == pytest.approx(1.0, abs=1e-8)
    assert hausdorff(seg, pt) == pytest.approx(SQRT2, abs=1e-12)


def test_enlargement_inclusion_tight_rotation_case(plane_orthant):
    # single image point at (3/sqrt2, 3/sqrt2); enlargement by 3/sqrt2 + 1
    # fits exactly inside the unit enlargement of the orthant
    v = 3.0 / SQRT2
    s = 3.0 / SQRT2 + 1.0
    res = enlargement_inclusion(VPolytope([[v, v]]), s, plane_orthant, 1.0)
    assert res.verdict is Verdict.HOLDS
    assert res.sup_estimate == pytest.approx(1.0, abs=1e-9)

    res_over = enlargement_inclusion(VPolytope([[v, v]]), s + 1e-3, plane_orthant, 1.0)
    assert res_over.verdict is Verdict.FAILS


def test_enlargement_inclusion_deep_interior(plane_orthant):
    res = enlargement_inclusion(VPolytope([[5.0, 5.0]]), 0.1, plane_orthant, 1.0)
    assert res.verdict is Verdict.HOLDS


def test_enlargement_inclusion_fails_with_witness(plane_orthant):
    res = enlargement_inclusion(VPolytope([[-2.0, 0.0]]), 0.5, plane_orthant, 1.0)
    assert res.verdict is Verdict.FAILS
    assert np.allclose(res.witness, [-2.5, 0.0], atol=1e-9)
    assert dist_many(res.witness[None, :], orthant(2))[0] > 1.0


# ---------------------------------------------------------------------------
# property suites
# ---------------------------------------------------------------------------

def random_polytope(rng, m, max_vertices=8):
    k = int(rng.integers(1, max_vertices + 1))
    return VPolytope(rng.standard_normal((k, m)) * rng.uniform(0.5, 2.0))


def test_vertex_attainment_matches_sampling():
    rng = np.random.default_rng(42)
    for _ in range(60):
        m = int(rng.integers(2, 4))
        A = random_polytope(rng, m)
        cone = random_pointed_cone(rng, m)
        exact = excess(A, cone)
        w = rng.dirichlet(0.3 * np.ones(len(A.vertices)), size=10_000)
        combos = np.vstack([w @ A.vertices, A.vertices])  # unit weights included
        sampled = float(np.max(cone.distances(combos)))
        assert sampled <= exact + 1e-6
        assert sampled >= exact - 1e-6


def test_cone_displacement_never_raises_excess():
    # adding cone elements to the vertices cannot increase the excess, and
    # including the zero displacement preserves it
    rng = np.random.default_rng(7)
    for _ in range(60):
        m = int(rng.integers(2, 4))
        A = random_polytope(rng, m)
        cone = random_pointed_cone(rng, m)
        exact = excess(A, cone)
        mus = rng.uniform(0.0, 2.0, size=(40, len(cone.generators)))
        shifted = np.vstack([A.vertices + mu @ cone.generators for mu in mus])
        shifted = np.vstack([shifted, A.vertices])
        assert float(np.max(cone.distances(shifted))) <= exact + 1e-9
        assert float(np.max(cone.distances(shifted))) >= exact - 1e-9


def test_enlargement_additivity_of_excess():
    # when exc(A, C) > 0 the s-enlargement adds exactly s, confirmed by the
    # inclusion test bracketing the computed supremum
    rng = np.random.default_rng(11)
    done = 0
    while done < 25:
        m = int(rng.integers(2, 4))
        A = random_polytope(rng, m)
        cone = random_pointed_cone(rng, m)
        exact = excess(A, cone)
        if exact <= 1e-6:
            continue
        s = rng.uniform(0.1, 1.5)
        sup, _, _ = ball_sup_dist(A, s, cone)
        assert sup == pytest.approx(exact + s, abs=1e-6)
        assert enlargement_inclusion(A, s, cone, sup * (1 + 1e-6)).holds
        assert enlargement_inclusion(A, s, cone, sup * (1 - 1e-6)).verdict is Verdict.FAILS
        done += 1


def test_analytic_holds_path_is_sound():
    rng = np.random.default_rng(23)
    for _ in range(20):
        m = int(rng.integers(2, 4))
        A = random_polytope(rng, m)
        cone = random_pointed_cone(rng, m)
        s = rng.uniform(0.05, 0.5)
        r = float(np.max(dist_many(A.vertices, cone))) + s + rng.uniform(0.0, 0.5)
        res = enlargement_inclusion(A, s, cone, r)
        assert res.holds  # analytic sufficient test fires by construction
        w = rng.dirichlet(np.ones(len(A.vertices)), size=10_000)
        dirs = rng.standard_normal((10_000, m))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        pts = w @ A.vertices + s * rng.uniform(0, 1, size=(10_000, 1)) * dirs
        assert float(np.max(cone.distances(pts))) <= r + 1e-7


# ---------------------------------------------------------------------------
# construction and validation
# ---------------------------------------------------------------------------

def test_pointedness_detection():
    assert orthant(3).pointed
    assert PolyCone([[1.0, 0.2], [1.0, -0.2]]).pointed
    halfplane = PolyCone([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
    assert not halfplane.pointed


def test_whole_space_cone_rejected():
    with pytest.raises(ValueError):
        PolyCone([[1, 0], [-1, 0], [0, 1], [0, -1]])
    with pytest.raises(ValueError):
        PolyCone([[0.0, 0.0]])


def test_dimension_mismatch_errors(plane_orthant):
    with pytest.raises(ValueError):
        project_dist([1.0, 2.0, 3.0], plane_orthant)
    with pytest.raises(ValueError):
        excess(VPolytope([[1.0, 2.0, 3.0]]), plane_orthant)
    with pytest.raises(ValueError):
        hausdorff(VPolytope([[1.0, 2.0]]), VPolytope([[1.0, 2.0, 3.0]]))
    with pytest.raises(ValueError):
        SumSet(VPolytope([[1.0, 2.0, 3.0]]), plane_orthant)


def test_sumset_distance_against_variational_inequality():
    # the projection onto a convex set is characterized by
    # <y - proj, z - proj> <= 0 for all z in the set
    rng = np.random.default_rng(5)
    for _ in range(25):
        m = int(rng.integers(1, 5))
        kb, kg = int(rng.integers(1, 6)), int(rng.integers(0, 5))
        base = VPolytope(rng.standard_normal((kb, m)) * 2.0)
        cone = None
        if kg and rng.random() < 0.8:
            try:
                cone = PolyCone(rng.standard_normal((kg, m)) + 1.5)
            except ValueError:
                cone = None
        S = SumSet(base, cone)
        y = rng.standard_normal(m) * 3.0
        proj, d = project_dist(y, S)
        assert d == pytest.approx(float(np.linalg.norm(y - proj)), abs=1e-12)
        w = rng.dirichlet(np.ones(kb), size=4000)
        pts = w @ base.vertices
        if cone is not None:
            pts = pts + rng.uniform(0, 4, size=(4000, len(cone.generators))) @ cone.generators
        assert float(np.max((pts - proj) @ (y - proj))) <= 1e-9
