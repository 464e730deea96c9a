import math

import numpy as np
import pytest

from svikit.geometry import SumSet, VPolytope, enlargement_inclusion, orthant
from svikit.increase import (HypothesisViolated, Mode, PropertyAbsent,
                             SamplingConfig, check_increase, estimate_bound,
                             global_infimum, hints_for_matrix, perturbed_bound)
from svikit.problems import rotation_inclusion_problem
from conftest import ROT_BOUND, PERTURBED_BOUND

SQRT2 = math.sqrt(2.0)


def scaled_rotation(lam, theta):
    Q = lam * np.array([[math.cos(theta), -math.sin(theta)],
                        [math.sin(theta), math.cos(theta)]])
    return Q, (lambda x: VPolytope((Q @ x)[None, :]))


def deviation_map(center, components=2):
    def f(x):
        dev = abs(float(x[0]) - center)
        return VPolytope(np.full((1, components), dev))
    return f


# ---------------------------------------------------------------------------
# witness search
# ---------------------------------------------------------------------------

def test_witness_found_just_below_the_exact_bound(plane_orthant):
    theta = 0.7
    Q, g = scaled_rotation(3.0, theta)
    hints = hints_for_matrix(Q, plane_orthant)
    u = check_increase(g, plane_orthant, [0.0, 0.0], ROT_BOUND - 1e-3, 1.0,
                       hints=hints)
    assert u is not None
    analytic = np.array([math.cos(math.pi / 4 - theta), math.sin(math.pi / 4 - theta)])
    assert np.allclose(u, analytic, atol=1e-9)


def test_no_witness_above_the_exact_bound(plane_orthant):
    Q, g = scaled_rotation(3.0, 0.7)
    u = check_increase(g, plane_orthant, [0.0, 0.0], 5.0, 1.0,
                       hints=hints_for_matrix(Q, plane_orthant))
    assert u is None


def test_constant_infeasible_map_has_no_witness(plane_orthant):
    g = lambda x: VPolytope(np.array([[-1.0, -1.0]]))
    assert check_increase(g, plane_orthant, [0.0, 0.0], 1.3, 1.0) is None


def test_check_increase_validates_arguments(plane_orthant):
    _, g = scaled_rotation(3.0, 0.0)
    with pytest.raises(ValueError):
        check_increase(g, plane_orthant, [0.0, 0.0], 1.0, 1.0)
    with pytest.raises(ValueError):
        check_increase(g, plane_orthant, [0.0, 0.0], 2.0, 0.0)


# ---------------------------------------------------------------------------
# bound bracketing
# ---------------------------------------------------------------------------

def test_estimate_bracket_rotation_off_origin(plane_orthant):
    Q, g = scaled_rotation(3.0, 0.7)
    est = estimate_bound(g, plane_orthant, [0.3, -1.2],
                         hints=hints_for_matrix(Q, plane_orthant))
    assert 3.07 <= est.alpha_lo <= 3.13
    assert est.alpha_lo <= ROT_BOUND <= est.alpha_hi


def test_estimate_bracket_five_times_identity_rotation(plane_orthant):
    Q, g = scaled_rotation(5.0, 0.0)
    est = estimate_bound(g, plane_orthant, [0.0, 0.0],
                         hints=hints_for_matrix(Q, plane_orthant))
    target = 5.0 / SQRT2 + 1.0
    assert est.alpha_lo <= target <= est.alpha_hi
    assert est.width <= 0.06 * target


def test_estimate_decrease_mode_deviation(plane_orthant):
    g = deviation_map(0.4)
    est = estimate_bound(g, plane_orthant, [1.3], mode=Mode.DECREASE)
    assert est.alpha_lo >= 2.0 - 0.05
    assert est.alpha_hi >= 2.0 - 1e-9
    assert est.mode is Mode.DECREASE


def test_estimate_decrease_absent_at_the_minimizer(plane_orthant):
    g = deviation_map(0.4)
    with pytest.raises(PropertyAbsent):
        estimate_bound(g, plane_orthant, [0.4], mode=Mode.DECREASE)


def test_witness_records_are_sound_and_non_self(plane_orthant):
    Q, g = scaled_rotation(3.0, 1.1)
    x = np.array([0.5, 0.2])
    est = estimate_bound(g, plane_orthant, x, hints=hints_for_matrix(Q, plane_orthant))
    assert est.witnesses
    target = SumSet(g(x), plane_orthant)
    for r, u in est.witnesses:
        assert np.linalg.norm(u - x) > 0.0
        res = enlargement_inclusion(g(np.asarray(u)), est.alpha_lo * r, target, r)
        assert res.holds


def test_bracket_refutation_survives_denser_sampling(plane_orthant):
    Q, g = scaled_rotation(3.0, 0.3)
    cfg = SamplingConfig()
    est = estimate_bound(g, plane_orthant, [0.0, 0.0], cfg,
                         hints=hints_for_matrix(Q, plane_orthant))
    assert est.alpha_hi < cfg.alpha_max
    dense = SamplingConfig(directions=4 * cfg.directions)
    qualifying = list(dense.radii)[-dense.qualifying_radii:]
    found = all(
        check_increase(g, plane_orthant, [0.0, 0.0], est.alpha_hi, r, dense,
                       hints=hints_for_matrix(Q, plane_orthant)) is not None
        for r in qualifying)
    assert not found  # the refutation at alpha_hi is genuine


# ---------------------------------------------------------------------------
# global constants and the perturbation calculus
# ---------------------------------------------------------------------------

def test_global_infimum_matrix_part_only():
    prob = rotation_inclusion_problem(with_h=False, with_fan=False,
                                      declared_alpha=None)
    res = global_infimum(prob, [0.0, 2.1], 4, SamplingConfig(seed=1))
    assert res.samples_used >= 4
    assert abs(res.alpha - ROT_BOUND) <= 0.06


def test_global_infimum_full_problem(rotation_problem):
    res = global_infimum(rotation_problem, [0.0, 2.1], 4, SamplingConfig(seed=1))
    assert res.alpha >= PERTURBED_BOUND - 0.1


def test_perturbed_bound_examples():
    assert perturbed_bound(3.12132, 0.5) == pytest.approx(1.56066)
    assert perturbed_bound(2.5, 0.0) == pytest.approx(2.5)
    with pytest.raises(HypothesisViolated):
        perturbed_bound(2.0, 0.6)  # 0.6 >= 1 - 1/2
    with pytest.raises(ValueError):
        perturbed_bound(0.9, 0.1)


def test_perturbation_consistency_on_the_full_instance(rotation_problem, plane_orthant):
    # the perturbed increase bound stays above (1 - ell) * base on samples
    from svikit.setmaps import evaluate
    from svikit.increase import hints_for_problem
    rng = np.random.default_rng(3)
    floor = perturbed_bound(ROT_BOUND, 0.5)
    p = 0.0
    hints = hints_for_problem(rotation_problem, p)
    for _ in range(5):
        x = rng.uniform(-2, 2, size=2)
        est = estimate_bound(lambda xx: evaluate(rotation_problem, p, xx),
                             plane_orthant, x, hints=hints, p_for_seed=p)
        assert est.alpha_lo >= floor - 0.1
