"""Closed forms for the quadratic testbed, the fixed-point error bound,
and empirical convergence-rate estimation.

For min_x alpha/2 ||x||^2 + 1/(2 beta) ||Ax - z||^2 the true primal
solution and the fixed point of the iteration with surrogate transpose V^T
are available in closed form, which makes the quadratic problems an exact
oracle for the solver.
"""

import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import InsufficientData, InvalidParameter, SingularSystem, SolveFailed
from .operators import DenseMap, estimate_operator_norm

__all__ = [
    "QuadraticProblem",
    "FixedPointPair",
    "RateEstimate",
    "ErrorBoundReport",
    "quadratic_true_solution",
    "quadratic_mismatched_fixed_point",
    "error_bound",
    "estimate_linear_rate",
    "verify_error_bound_on_random",
]


@dataclass(frozen=True)
class QuadraticProblem:
    """Data of the quadratic testbed: dense A, dense surrogate V, data z,
    and the two curvature constants."""

    A: DenseMap
    V: DenseMap
    z: np.ndarray
    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise InvalidParameter("alpha and beta must be positive")
        if self.A.shape != self.V.shape:
            raise InvalidParameter("A and V must share dimensions")


@dataclass(frozen=True)
class FixedPointPair:
    x_hat: np.ndarray
    y_hat: np.ndarray


@dataclass(frozen=True)
class RateEstimate:
    """Least-squares fit of log ||u_i - u_hat||^2 over the trace tail."""

    empirical_log_rate: float
    r_squared: float
    theoretical_log_rate: float
    tail_start: int


def quadratic_true_solution(prob):
    """x* = A^T (alpha beta I + A A^T)^{-1} z, with a residual check on the
    normal equations (alpha I + beta^{-1} A^T A) x* = beta^{-1} A^T z."""
    a = prob.A.matrix
    m = a.shape[0]
    lhs = prob.alpha * prob.beta * np.eye(m) + a @ a.T
    try:
        w = np.linalg.solve(lhs, prob.z)
    except np.linalg.LinAlgError as exc:  # cannot occur for alpha, beta > 0
        raise SolveFailed(str(exc)) from exc
    x_star = a.T @ w
    resid = (prob.alpha * x_star + (a.T @ (a @ x_star)) / prob.beta
             - (a.T @ prob.z) / prob.beta)
    scale = 1.0 + np.linalg.norm(prob.z)
    if np.linalg.norm(resid) > 1e-9 * scale:
        raise SolveFailed("normal-equation residual above tolerance")
    return x_star


def quadratic_mismatched_fixed_point(prob):
    """The unique fixed point of the quadratic iteration with surrogate V:

    x_hat = V^T (alpha beta I + A V^T)^{-1} z
    y_hat = -alpha (alpha beta I + A V^T)^{-1} z

    Verifies the stationarity relations -V^T y_hat = alpha x_hat and
    A x_hat = beta y_hat + z before returning.
    """
    a = prob.A.matrix
    v = prob.V.matrix
    m = a.shape[0]
    lhs = prob.alpha * prob.beta * np.eye(m) + a @ v.T
    try:
        w = np.linalg.solve(lhs, prob.z)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    scale = 1.0 + np.linalg.norm(prob.z)
    if np.linalg.norm(lhs @ w - prob.z) > 1e-6 * scale:
        raise SingularSystem("fixed-point system is numerically singular")
    x_hat = v.T @ w
    y_hat = -prob.alpha * w
    if np.linalg.norm(-v.T @ y_hat - prob.alpha * x_hat) > 1e-9 * (
        1.0 + np.linalg.norm(x_hat)
    ):
        raise SolveFailed("primal stationarity residual above tolerance")
    if np.linalg.norm(a @ x_hat - prob.beta * y_hat - prob.z) > 1e-9 * scale:
        raise SolveFailed("dual stationarity residual above tolerance")
    return FixedPointPair(x_hat, y_hat)


def error_bound(gamma_G, A, V, y_hat):
    """Distance bound between the true solution and the surrogate fixed
    point: ||(V - A)^T y_hat|| / gamma_G."""
    if gamma_G <= 0:
        raise InvalidParameter("gamma_G must be positive")
    diff = V.apply_transpose(y_hat) - A.apply_transpose(y_hat)
    return float(np.linalg.norm(diff)) / gamma_G


def estimate_linear_rate(trace, ref_name, tail_fraction=0.5):
    """Fit log(distance^2) against the iteration index over the final
    tail_fraction of above-floor samples (floor: distance > 1e-13).

    Needs at least 10 tail points; the theoretical rate log(omega) is taken
    from the trace's plan metadata.
    """
    if not (0 < tail_fraction <= 1):
        raise InvalidParameter("tail_fraction must lie in (0, 1]")
    if ref_name not in trace.ref_distances:
        raise InvalidParameter(f"trace has no reference {ref_name!r}")
    d = trace.distances(ref_name)
    iters = np.asarray(trace.iterations, dtype=float)
    above = d > 1e-13
    d, iters = d[above], iters[above]
    n_tail = int(math.ceil(tail_fraction * d.size))
    if n_tail < 10:
        raise InsufficientData(
            f"need >= 10 above-floor tail points, have {n_tail}"
        )
    d, iters = d[-n_tail:], iters[-n_tail:]
    logs = 2.0 * np.log(d)
    slope, intercept = np.polyfit(iters, logs, 1)
    fitted = slope * iters + intercept
    ss_res = float(np.sum((logs - fitted) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    theoretical = math.log(trace.omega) if trace.omega is not None else math.nan
    return RateEstimate(float(slope), r_squared, theoretical, int(iters[0]))


@dataclass
class ErrorBoundReport:
    n_instances: int
    n_violations: int
    n_singular_skipped: int
    max_ratio: float
    holds: bool
    actuals: list
    bounds: list

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)


def _random_quadratic(n, m, alpha, beta, mismatch_scale, rng_seed):
    rng = np.random.default_rng(rng_seed)
    a = rng.standard_normal((m, n))
    z = rng.standard_normal(m)
    a_map = DenseMap(a)
    if mismatch_scale == 0:
        v = a.copy()
    else:
        e = rng.standard_normal((m, n))
        norm_a = estimate_operator_norm(a_map, tol=1e-10, seed=1)
        norm_e = estimate_operator_norm(DenseMap(e), tol=1e-10, seed=2)
        e *= mismatch_scale * norm_a / norm_e
        v = a + e
    return QuadraticProblem(a_map, DenseMap(v), z, alpha, beta)


def verify_error_bound_on_random(
    n, m, alpha, beta, mismatch_scale, n_instances, seed
):
    """Check the fixed-point error bound on seeded random instances.

    For each instance: V = A + E with ||E|| = mismatch_scale * ||A||;
    compute the true solution, the surrogate fixed point, the actual error
    and the bound.  The report holds iff actual <= bound * (1 + 1e-10) on
    every instance; singular instances are counted and skipped.
    """
    if n_instances < 1:
        raise InvalidParameter("n_instances must be >= 1")
    actuals, bounds = [], []
    n_singular = 0
    n_violations = 0
    max_ratio = 0.0
    for idx in range(n_instances):
        prob = _random_quadratic(n, m, alpha, beta, mismatch_scale, [seed, idx])
        try:
            pair = quadratic_mismatched_fixed_point(prob)
        except SingularSystem:
            n_singular += 1
            continue
        x_star = quadratic_true_solution(prob)
        actual = float(np.linalg.norm(x_star - pair.x_hat))
        bound = error_bound(alpha, prob.A, prob.V, pair.y_hat)
        actuals.append(actual)
        bounds.append(bound)
        if actual > bound * (1.0 + 1e-10):
            n_violations += 1
        if bound > 0:
            max_ratio = max(max_ratio, actual / bound)
    return ErrorBoundReport(
        n_instances=n_instances,
        n_violations=n_violations,
        n_singular_skipped=n_singular,
        max_ratio=max_ratio,
        holds=n_violations == 0,
        actuals=actuals,
        bounds=bounds,
    )
