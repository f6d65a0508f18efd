import math

import numpy as np
import pytest

from pdmm.analysis import (
    FixedPointPair,
    QuadraticProblem,
    error_bound,
    estimate_linear_rate,
    quadratic_mismatched_fixed_point,
    quadratic_true_solution,
    verify_error_bound_on_random,
)
from pdmm.errors import InsufficientData, InvalidParameter, SingularSystem
from pdmm.operators import DenseMap
from pdmm.solver import RunTrace


def scalar_problem(a=1.0, v=0.5, alpha=1.0, beta=1.0, z=2.0):
    return QuadraticProblem(
        DenseMap([[a]]), DenseMap([[v]]), np.array([z]), alpha, beta
    )


def test_true_solution_scalar():
    # by hand: 1 * (1 + 1)^{-1} * 2 = 1
    np.testing.assert_allclose(quadratic_true_solution(scalar_problem()), [1.0])


def test_true_solution_zero_data_and_zero_operator():
    np.testing.assert_allclose(
        quadratic_true_solution(scalar_problem(z=0.0)), [0.0]
    )
    np.testing.assert_allclose(
        quadratic_true_solution(scalar_problem(a=0.0, v=0.0)), [0.0]
    )


def test_fixed_point_scalar():
    pair = quadratic_mismatched_fixed_point(scalar_problem())
    np.testing.assert_allclose(pair.x_hat, [2.0 / 3.0], rtol=1e-12)
    np.testing.assert_allclose(pair.y_hat, [-4.0 / 3.0], rtol=1e-12)


def test_fixed_point_matches_true_solution_without_mismatch():
    rng = np.random.default_rng(0)
    a = rng.standard_normal((6, 9))
    prob = QuadraticProblem(DenseMap(a), DenseMap(a.copy()), rng.standard_normal(6), 0.7, 1.3)
    pair = quadratic_mismatched_fixed_point(prob)
    x_star = quadratic_true_solution(prob)
    np.testing.assert_allclose(pair.x_hat, x_star, rtol=1e-10, atol=1e-12)


def test_fixed_point_zero_data():
    pair = quadratic_mismatched_fixed_point(scalar_problem(z=0.0))
    np.testing.assert_array_equal(pair.x_hat, [0.0])
    np.testing.assert_array_equal(pair.y_hat, [0.0])


def test_fixed_point_singular_system():
    # alpha beta I + A V^T = 1 - 1 = 0
    prob = scalar_problem(a=1.0, v=-1.0, alpha=1.0, beta=1.0)
    with pytest.raises(SingularSystem):
        quadratic_mismatched_fixed_point(prob)


def test_fixed_point_two_printed_forms_agree():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((8, 12))
    v = a + 0.05 * rng.standard_normal((8, 12))
    z = rng.standard_normal(8)
    alpha, beta = 0.4, 1.7
    prob = QuadraticProblem(DenseMap(a), DenseMap(v), z, alpha, beta)
    pair = quadratic_mismatched_fixed_point(prob)
    # alternate form: (alpha I + beta^{-1} V^T A)^{-1} (beta^{-1} V^T z)
    lhs = alpha * np.eye(12) + (v.T @ a) / beta
    alt = np.linalg.solve(lhs, v.T @ z / beta)
    np.testing.assert_allclose(pair.x_hat, alt, rtol=1e-9)


def test_error_bound_values_and_homogeneity():
    prob = scalar_problem()
    pair = quadratic_mismatched_fixed_point(prob)
    b = error_bound(1.0, prob.A, prob.V, pair.y_hat)
    assert b == pytest.approx(2.0 / 3.0, rel=1e-12)
    actual = abs(quadratic_true_solution(prob)[0] - pair.x_hat[0])
    assert actual <= b
    assert error_bound(1.0, prob.A, prob.A, pair.y_hat) == 0.0
    assert error_bound(1.0, prob.A, prob.V, np.zeros(1)) == 0.0
    # degree 1 in y_hat, degree -1 in gamma_G
    assert error_bound(1.0, prob.A, prob.V, 3.0 * pair.y_hat) == pytest.approx(3 * b)
    assert error_bound(2.0, prob.A, prob.V, pair.y_hat) == pytest.approx(b / 2)
    with pytest.raises(InvalidParameter):
        error_bound(0.0, prob.A, prob.V, pair.y_hat)


def make_trace(distances, omega=0.5):
    trace = RunTrace(ref_names=["u_hat"], ref_distances={"u_hat": list(distances)})
    trace.iterations = list(range(1, len(distances) + 1))
    trace.residuals = [0.0] * len(distances)
    trace.omega = omega
    return trace


def test_rate_estimate_exact_geometric():
    rho = 0.8
    d = 3.0 * rho ** np.arange(60)
    est = estimate_linear_rate(make_trace(d), "u_hat", 0.5)
    assert est.empirical_log_rate == pytest.approx(2 * math.log(rho), rel=1e-9)
    assert est.r_squared == pytest.approx(1.0, abs=1e-12)
    assert est.theoretical_log_rate == pytest.approx(math.log(0.5))


def test_rate_estimate_insufficient_data():
    with pytest.raises(InsufficientData):
        estimate_linear_rate(make_trace(np.full(50, 1e-15)), "u_hat", 0.5)
    with pytest.raises(InsufficientData):
        estimate_linear_rate(make_trace([1.0, 0.5, 0.25]), "u_hat", 0.5)


def test_rate_estimate_floor_exclusion():
    d = np.concatenate([0.9 ** np.arange(100), np.full(20, 1e-15)])
    est = estimate_linear_rate(make_trace(d), "u_hat", 0.5)
    assert est.empirical_log_rate == pytest.approx(2 * math.log(0.9), rel=1e-6)


def test_error_bound_random_suite_holds():
    report = verify_error_bound_on_random(
        n=20, m=10, alpha=0.15, beta=1.0, mismatch_scale=0.05, n_instances=100, seed=0
    )
    assert report.holds
    assert report.n_violations == 0
    assert report.n_singular_skipped == 0
    assert 0 < report.max_ratio <= 1.0


def test_error_bound_random_suite_zero_mismatch():
    report = verify_error_bound_on_random(
        n=8, m=5, alpha=0.5, beta=1.0, mismatch_scale=0.0, n_instances=5, seed=1
    )
    assert report.holds
    assert all(a <= 1e-10 for a in report.actuals)
    assert all(b <= 1e-10 for b in report.bounds)


def test_error_bound_random_suite_deterministic():
    kwargs = dict(n=6, m=4, alpha=0.3, beta=1.0, mismatch_scale=0.1, n_instances=1, seed=7)
    r1 = verify_error_bound_on_random(**kwargs)
    r2 = verify_error_bound_on_random(**kwargs)
    assert r1.actuals == r2.actuals
    assert r1.bounds == r2.bounds
    assert r1.to_json() == r2.to_json()


def test_quadratic_problem_validation():
    with pytest.raises(InvalidParameter):
        QuadraticProblem(DenseMap([[1.0]]), DenseMap([[1.0]]), np.array([1.0]), -1.0, 1.0)
    with pytest.raises(InvalidParameter):
        QuadraticProblem(
            DenseMap([[1.0]]), DenseMap(np.eye(2)), np.array([1.0]), 1.0, 1.0
        )
