import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rbwalk.errors import InfeasibleError, NumericError, ParameterError
from rbwalk.theory import (
    congestion_cover_const,
    flip_F,
    flip_fixed_point,
    flip_roots_b2,
    flip_smallest_root,
    gamma_budget,
    nonvisit_prob,
    oblivious_budget,
    p_v,
    predict,
    returns_tree,
    sigma_b,
    sigma_rb,
    smooth_cover_const,
    theta_flip,
)


def test_sigma_values():
    assert sigma_rb(1, 2) == 2.0
    assert sigma_rb(1, 3) == 1.5
    assert sigma_b(3) == 2.0
    assert sigma_b(4) == 1.5
    with pytest.raises(ParameterError):
        sigma_b(2)
    with pytest.raises(ParameterError):
        sigma_rb(1, 1)


@pytest.mark.parametrize(
    "alpha,r,b,expected", [(0.5, 1, 3, 0.1875), (0.5, 2, 2, 0.375), (1 - 1e-12, 1, 2, 2 / 3)]
)
def test_gamma_budget(alpha, r, b, expected):
    assert gamma_budget(alpha, r, b) == pytest.approx(expected, rel=1e-9)


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 1.5])
def test_gamma_budget_domain(alpha):
    with pytest.raises(ParameterError):
        gamma_budget(alpha, 1, 3)


def test_smooth_cover_const():
    assert smooth_cover_const(0.5, 1, 3) == pytest.approx(1.75)
    assert smooth_cover_const(1.0, 2, 3) == sigma_rb(2, 3)
    assert smooth_cover_const(0.0, 2, 3) == sigma_b(3)
    with pytest.raises(ParameterError):
        smooth_cover_const(0.5, 1, 2)


def test_congestion_cover_const():
    assert congestion_cover_const(0, 7, 1) == 2.0
    assert congestion_cover_const(5, 5, 1) == 4.0
    assert congestion_cover_const(10, 5, 2) == pytest.approx(4.5)
    with pytest.raises(ParameterError):
        congestion_cover_const(1, 0, 1)


def test_oblivious_budget_is_red_share_of_steps():
    n = 2000
    steps = 0.8 * 2 * n * math.log(n)
    assert oblivious_budget(0.8, n, 1, 2) == round(steps / 3)


# -- flip walks --------------------------------------------------------------------


def test_flip_simple_walk_point():
    s = flip_fixed_point(1, 2, 1 / 3, 1 / 3)
    assert s.psi_R == pytest.approx(1 / 3, abs=1e-10)
    assert s.psi_B == pytest.approx(1 / 3, abs=1e-10)
    assert s.f == pytest.approx(0.5, abs=1e-10)
    assert s.returns == pytest.approx(2.0, abs=1e-9)
    assert s.feasible


@pytest.mark.parametrize("q", np.linspace(2 / 3, 0.99, 25))
def test_flip_matches_closed_form(q):
    s = flip_fixed_point(1, 2, 1 - q, q / 2)
    assert abs(s.returns - theta_flip(q)) <= 1e-8
    assert abs(s.psi_B - (1 - flip_roots_b2(q).plus)) <= 1e-10
    assert max(map(abs, s.residuals())) <= 1e-10


def test_flip_b3_matches_bisection():
    s = flip_fixed_point(1, 3, 0.1, 0.3)
    assert max(map(abs, s.residuals())) <= 1e-10
    assert s.psi_B == pytest.approx(flip_smallest_root(0.9, 3), abs=1e-10)


@settings(max_examples=60, deadline=None)
@given(r=st.integers(1, 3), b=st.integers(2, 4), frac=st.floats(0.05, 0.95))
def test_flip_solution_properties(r, b, frac):
    # split total mass 1 between colors; each color shares its mass evenly
    rho_R = frac / r
    rho_B = (1 - frac) / b
    if r + b < 3:
        return
    try:
        s = flip_fixed_point(r, b, rho_R, rho_B)
    except InfeasibleError:
        return
    assert max(map(abs, s.residuals())) <= 1e-10
    assert 0 <= s.psi_R <= 1 - rho_R and 0 <= s.psi_B <= 1 - rho_B
    assert s.feasible and 0 <= s.f < 1
    assert s.returns >= 1


def test_flip_near_critical_reports_numeric_error():
    # rho_R -> 0 leaves blue lines, where the walk is recurrent; the iteration
    # then creeps towards psi_B = 1 - rho_B and must report, not hang
    with pytest.raises(NumericError):
        flip_fixed_point(1, 2, 1e-300, 0.5, max_iter=10_000)


def test_flip_probability_sum_checked():
    with pytest.raises(ParameterError):
        flip_fixed_point(1, 2, 0.5, 0.5)
    with pytest.raises(ParameterError):
        flip_fixed_point(1, 2, 0.0, 0.5)


@pytest.mark.parametrize("b", [2, 3, 4])
def test_F_roots_at_domain_ends(b):
    # q = b/(b+1): roots 1/(b+1) and b/(b+1); q = 1: roots 1/b and (b-1)/b
    q = b / (b + 1)
    for z in (1 / (b + 1), b / (b + 1)):
        assert flip_F(z, q, b) == pytest.approx(0, abs=1e-12)
    assert flip_smallest_root(q, b) == pytest.approx(1 / (b + 1), abs=1e-12)
    for z in (1 / b, (b - 1) / b):
        assert flip_F(z, 1.0, b) == pytest.approx(0, abs=1e-12)
    assert flip_smallest_root(1.0, b) == pytest.approx(1 / b, abs=1e-12)


def test_F_half_at_two_thirds():
    assert flip_F(0.5, 2 / 3, 2) == pytest.approx(7 / 90, abs=1e-14)
    with pytest.raises(ParameterError):
        flip_F(0.5, 0.5, 2)


def test_roots_b2_two_thirds():
    rts = flip_roots_b2(2 / 3)
    assert sorted(rts) == pytest.approx([1 / 9, 1 / 3, 2 / 3], abs=1e-14)
    assert rts.plus == pytest.approx(2 / 3, abs=1e-14)
    assert rts.plus - (2 / 3) / 2 == pytest.approx(1 / 3)  # xi_B


@settings(max_examples=100, deadline=None)
@given(q=st.floats(2 / 3, 1.0))
def test_roots_b2_vieta(q):
    w = flip_roots_b2(q)
    assert sum(w) == pytest.approx(q / 2 * (4 - q), abs=1e-12)
    assert w[0] * w[1] + w[0] * w[2] + w[1] * w[2] == pytest.approx(0.75 * q * q, abs=1e-12)
    assert w[0] * w[1] * w[2] == pytest.approx(q**4 / 8, abs=1e-12)
    # the feasible root agrees with bisection on F; near q = 1 it merges with
    # another root and is only determined to about sqrt(machine eps)
    tol = 1e-10 if q <= 1 - 1e-6 else 1e-7
    assert 1 - w.plus == pytest.approx(flip_smallest_root(q, 2), abs=tol)


def test_theta_flip_minimum():
    assert theta_flip(2 / 3) == pytest.approx(2.0, abs=1e-14)
    grid = np.linspace(0.01, 0.999, 500)
    vals = np.array([theta_flip(q) for q in grid])
    assert np.all(vals[np.abs(grid - 2 / 3) > 1e-3] > 2.0)
    assert grid[np.argmin(vals)] == pytest.approx(2 / 3, abs=3e-3)
    assert math.isinf(theta_flip(1.0))
    assert theta_flip(0.9) == pytest.approx(flip_fixed_point(1, 2, 0.1, 0.45).returns, abs=1e-8)
    with pytest.raises(ParameterError):
        theta_flip(0.0)


def test_theta_flip_extends_below_two_thirds():
    # the fixed point still solves the equations when rho_R > rho_B
    for q in (0.3, 0.5, 0.6):
        assert theta_flip(q) == pytest.approx(flip_fixed_point(1, 2, 1 - q, q / 2).returns, abs=1e-8)


# -- first visit -----------------------------------------------------------------


def test_first_visit_helpers():
    assert returns_tree(3) == 2.0
    assert returns_tree(4) == 1.5
    with pytest.raises(ParameterError):
        returns_tree(2)
    p = p_v(0.01, 2.0)
    assert p == 0.005
    assert nonvisit_prob(p, 0) == 1.0
    t = np.array([0, 10, 100])
    assert np.allclose(nonvisit_prob(p, t), 1.005 ** -t)
    with pytest.raises(ParameterError):
        nonvisit_prob(0.0, 3)


# -- predictions -----------------------------------------------------------------


def test_predict_models():
    n = 1000
    nlogn = n * math.log(n)
    assert predict("simple", {"r": 1, "b": 2}, n).predicted_cover == pytest.approx(2 * nlogn)
    assert predict("smooth", {"alpha": 0.5, "r": 1, "b": 3}, n).predicted_cover == pytest.approx(1.75 * nlogn)
    assert predict("blue", {"b": 3}, n).theta == 2.0
    assert predict("congestion", {"C": 10, "F": 10, "r": 1}, n).theta == 4.0
    flip = predict("flip", {"r": 1, "b": 2, "rho_R": 1 / 3, "rho_B": 1 / 3}, n)
    assert flip.theta == pytest.approx(2.0)
    with pytest.raises(ParameterError):
        predict("nope", {}, n)


def test_predict_oblivious():
    n = 2000
    ham = predict("oblivious", {"r": 1, "b": 2, "budget_frac": 0.8, "graph": "hamilton"}, n)
    assert ham.predicted_cover == pytest.approx(n * n / 2)
    two = predict("oblivious", {"r": 1, "b": 2, "budget_frac": 0.8, "graph": "twofactor"}, n)
    assert two.failure_expected
    full = predict("oblivious", {"r": 1, "b": 2, "budget_frac": 1.2, "graph": "hamilton"}, n)
    assert full.theta == 2.0
    # with b >= 3 a budget fraction alpha behaves like the smooth walk
    sm = predict("oblivious", {"r": 1, "b": 3, "budget_frac": 0.5}, n)
    assert sm.theta == pytest.approx(smooth_cover_const(0.5, 1, 3), rel=1e-3)
