"""Scenario builders: the quadratic testbed, two divergence counterexamples,
and the TV-regularized CT reconstruction problem.

A Scenario bundles a SaddleProblem with a recommended stepsize plan, any
closed-form reference points, a primal objective closure, and the behavior
the scenario is documented to exhibit when solved.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import analysis, stepsize
from .errors import InvalidParameter, PreconditionViolated, Unavailable
from .operators import (
    DenseMap,
    LinearMap,
    MismatchedPair,
    StackedMap,
    estimate_operator_norm,
    mismatch_norm,
    scaled_identity,
)
from .phantom import shepp_logan
from .prox import (
    prox_box_indicator,
    prox_ct_dual_block,
    prox_quadratic_dual,
    prox_scaled_sqnorm,
    prox_zero,
)
from .radon import radon_line, radon_strip
from .solver import SaddleProblem
from .stepsize import ConvexityData, NormData, StepPlan

__all__ = [
    "Scenario",
    "build_quadratic",
    "build_l1_counterexample",
    "build_divergence_example",
    "build_tv_ct",
    "gradient_op",
    "plan_for_scenario",
    "primal_objective",
    "shepp_logan",
]


@dataclass
class Scenario:
    """A solver-ready problem plus everything needed to judge a run."""

    problem: SaddleProblem
    plan_hint: dict
    references: dict = field(default_factory=dict)
    primal_objective: Optional[Callable[[np.ndarray], float]] = None
    expected_behavior: str = "converges_linear"
    norms: Optional[NormData] = None
    extras: dict = field(default_factory=dict)

    def matched_problem(self):
        """The same problem with the exact adjoint (surrogate = forward)."""
        return SaddleProblem(
            self.problem.prox_G,
            self.problem.prox_Fstar,
            self.problem.forward,
            self.problem.forward,
            self.problem.conv,
        )


def primal_objective(scenario, x):
    """F(Ax) + G(x) through the scenario's attached closure."""
    if scenario.primal_objective is None:
        raise Unavailable("scenario has no primal objective closure")
    return float(scenario.primal_objective(np.asarray(x, dtype=float)))


def plan_for_scenario(scenario):
    """Resolve the scenario's plan hint into a StepPlan."""
    hint = scenario.plan_hint
    planner = hint["planner"]
    if planner == "manual":
        return hint["plan"]
    if planner in ("mismatched", "simple"):
        if scenario.norms.norm_AmV == 0:
            # zero mismatch degenerates these planners; the exact-adjoint
            # plan is the right special case
            return stepsize.plan_classical(
                scenario.problem.conv, hint["kappa"], scenario.norms.norm_V
            )
        fn = stepsize.plan_mismatched if planner == "mismatched" else stepsize.plan_simple
        return fn(scenario.problem.conv, hint["kappa"], scenario.norms)
    if planner == "classical":
        return stepsize.plan_classical(
            scenario.problem.conv, hint["kappa"], hint.get("norm", scenario.norms.norm_V)
        )
    raise InvalidParameter(f"unknown planner hint {planner!r}")


def build_quadratic(n, m, alpha, beta, mismatch_scale, seed, allow_infeasible=False):
    """Random dense quadratic scenario with controlled mismatch.

    A is a seeded standard-normal matrix rescaled to unit spectral norm
    (so mismatch_scale is meaningful relative to provable stepsizes), the
    surrogate is V = A + E with ||E|| = mismatch_scale * ||A||, and the
    closed-form true solution and fixed point are attached as references.
    """
    if n < 1 or m < 1:
        raise InvalidParameter("need n, m >= 1")
    if alpha <= 0 or beta <= 0:
        raise InvalidParameter("alpha and beta must be positive")
    if mismatch_scale < 0:
        raise InvalidParameter("mismatch_scale must be >= 0")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((m, n))
    a /= estimate_operator_norm(DenseMap(a), tol=1e-11, seed=1)
    z = rng.standard_normal(m)
    if mismatch_scale == 0:
        v = a.copy()
    else:
        e = rng.standard_normal((m, n))
        norm_a = estimate_operator_norm(DenseMap(a), tol=1e-11, seed=2)
        norm_e = estimate_operator_norm(DenseMap(e), tol=1e-11, seed=3)
        v = a + e * (mismatch_scale * norm_a / norm_e)
    a_map, v_map = DenseMap(a), DenseMap(v)
    pair = MismatchedPair(a_map, v_map)
    norms = NormData(
        norm_V=estimate_operator_norm(v_map, tol=1e-11, seed=4),
        norm_AmV=mismatch_norm(pair, tol=1e-11, seed=5),
    )
    conv = ConvexityData(alpha, beta)
    if conv.gamma_G * conv.gamma_Fstar <= 2.0 * norms.norm_AmV**2 and not allow_infeasible:
        raise PreconditionViolated(
            "mismatch too large for provable stepsizes: "
            f"gamma product {alpha * beta:.6g} <= {2.0 * norms.norm_AmV ** 2:.6g}"
        )
    quad = analysis.QuadraticProblem(a_map, v_map, z, alpha, beta)
    pair_fp = analysis.quadratic_mismatched_fixed_point(quad)
    x_star = analysis.quadratic_true_solution(quad)
    if mismatch_scale == 0:
        # zero mismatch: fixed point and true solution are one object
        x_star = pair_fp.x_hat

    def objective(x):
        r = a_map.apply(x) - z
        return float(r @ r) / (2.0 * beta) + 0.5 * alpha * float(x @ x)

    return Scenario(
        problem=SaddleProblem(
            prox_scaled_sqnorm(alpha, n),
            prox_quadratic_dual(beta, z),
            a_map,
            v_map,
            conv,
        ),
        plan_hint={"planner": "mismatched", "kappa": 0.01},
        references={
            "x_star": x_star,
            "x_hat": pair_fp.x_hat,
            "y_hat": pair_fp.y_hat,
        },
        primal_objective=objective,
        expected_behavior="converges_linear",
        norms=norms,
        extras={"z": z, "quadratic": quad},
    )


def build_l1_counterexample(n, alpha_mm, tau, sigma, x0, y0):
    """l1-minimization with a sign-flipped scaled identity as surrogate.

    The origin is both the saddle point and a fixed point, yet from a
    componentwise positive start every primal entry strictly increases, so
    the run never approaches the solution.
    """
    if alpha_mm <= 0:
        raise InvalidParameter("alpha_mm must be positive")
    if tau <= 0 or sigma <= 0:
        raise InvalidParameter("stepsizes must be positive")
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (n,)).copy()
    y0 = np.broadcast_to(np.asarray(y0, dtype=float), (n,)).copy()
    if not (np.all(x0 > 0) and np.all(y0 > 0)):
        raise InvalidParameter("initialization must be componentwise positive")
    forward = scaled_identity(n, 1.0)
    surrogate = scaled_identity(n, -alpha_mm)
    plan = StepPlan(tau, sigma, 1.0, "manual")
    return Scenario(
        problem=SaddleProblem(
            prox_zero(n),
            prox_box_indicator(1.0, n),
            forward,
            surrogate,
            ConvexityData(0.0, 0.0),
        ),
        plan_hint={"planner": "manual", "plan": plan},
        references={"x_star": np.zeros(n), "y_star": np.zeros(n)},
        primal_objective=lambda x: float(np.abs(x).sum()),
        expected_behavior="diverges_monotone",
        norms=NormData(norm_V=alpha_mm, norm_AmV=1.0 + alpha_mm),
        extras={"x0": x0, "y0": y0, "alpha_mm": alpha_mm},
    )


def build_divergence_example(z, tau0, sigma0):
    """Rank-one least squares with a sign-flipped surrogate column, run
    with the accelerated schedule.

    The dual iterate stays pinned at -z while the primal gathers harmonic
    tau increments along the surrogate direction, so it diverges whenever
    z is nonzero.
    """
    norm_a_sq = 2.0  # forward operator (1 1)
    if tau0 <= 0 or sigma0 <= 0 or tau0 * sigma0 >= 1.0 / norm_a_sq:
        raise InvalidParameter("need tau0, sigma0 > 0 with tau0*sigma0 < 1/2")
    forward = DenseMap([[1.0, 1.0]])
    surrogate = DenseMap([[1.0, -1.0]])
    z_vec = np.array([float(z)])

    def objective(x):
        r = forward.apply(x) - z_vec
        return 0.5 * float(r @ r)

    return Scenario(
        problem=SaddleProblem(
            prox_zero(2),
            prox_quadratic_dual(1.0, z_vec),
            forward,
            surrogate,
            ConvexityData(0.0, 1.0),
        ),
        plan_hint={"planner": "manual", "plan": StepPlan(tau0, sigma0, 1.0, "manual")},
        references={},
        primal_objective=objective,
        expected_behavior="diverges_unbounded" if z != 0 else "stationary",
        norms=NormData(norm_V=math.sqrt(2.0), norm_AmV=2.0),
        extras={
            "z": float(z),
            "tau0": float(tau0),
            "sigma0": float(sigma0),
            "gamma": 1.0,
            "x0": np.zeros(2),
            "y0": -z_vec,
        },
    )


def gradient_op(m, n):
    """Forward-difference gradient on an m x n grid with replicate boundary;
    the transpose is the exact negative divergence."""
    if m < 2 or n < 2:
        raise InvalidParameter("gradient needs at least a 2 x 2 grid")

    def apply(x):
        img = x.reshape(m, n)
        g = np.zeros((m, n, 2))
        g[:-1, :, 0] = img[1:, :] - img[:-1, :]
        g[:, :-1, 1] = img[:, 1:] - img[:, :-1]
        return g.ravel()

    def apply_transpose(p):
        g = p.reshape(m, n, 2)
        out = np.zeros((m, n))
        out[:-1, :] -= g[:-1, :, 0]
        out[1:, :] += g[:-1, :, 0]
        out[:, :-1] -= g[:, :-1, 1]
        out[:, 1:] += g[:, :-1, 1]
        return out.ravel()

    return LinearMap(m * n * 2, m * n, apply, apply_transpose)


def _huber(t, eps, lambda1):
    """Smoothed magnitude penalty matching the lambda1-ball dual with an
    eps/2 quadratic term: t^2/(2 eps) below eps*lambda1, affine above."""
    if eps == 0:
        return lambda1 * t
    return np.where(
        t <= eps * lambda1,
        t * t / (2.0 * eps),
        lambda1 * t - 0.5 * eps * lambda1**2,
    )


def build_tv_ct(
    m,
    n,
    geom,
    lambda0,
    lambda1,
    lambda2,
    eps,
    noise_rel,
    seed,
    allow_infeasible=False,
):
    """TV-regularized CT scenario with a strip forward projector and a
    line-projector transpose as the (mismatched) backprojection.

    The measured sinogram is the strip projection of the phantom plus
    relative Gaussian noise with ||noise|| = noise_rel * ||clean||.  The
    stacked operator pairs the projector with the image gradient; the
    mismatch lives entirely in the projector block.
    """
    if lambda0 <= 0 or lambda1 <= 0 or lambda2 <= 0:
        raise InvalidParameter("lambda0, lambda1, lambda2 must be positive")
    if eps < 0 or noise_rel < 0:
        raise InvalidParameter("eps and noise_rel must be >= 0")
    image = shepp_logan(m, n)
    strip = radon_strip(geom, m, n)
    line = radon_line(geom, m, n)
    grad = gradient_op(m, n)
    clean = strip.apply(image.ravel())
    if noise_rel > 0:
        rng = np.random.default_rng(seed)
        g = rng.standard_normal(clean.size)
        z = clean + noise_rel * np.linalg.norm(clean) * g / np.linalg.norm(g)
    else:
        z = clean.copy()
    forward = StackedMap([strip, grad])
    surrogate = StackedMap([line, grad])
    pair = MismatchedPair(forward, surrogate)
    norms = NormData(
        norm_V=estimate_operator_norm(surrogate, tol=1e-8, max_iter=2000, seed=6),
        norm_AmV=mismatch_norm(pair, tol=1e-8, seed=7),
    )
    gamma_Fstar = min(1.0 / lambda0, eps)
    conv = ConvexityData(lambda2, gamma_Fstar)
    precondition_ok = bool(conv.gamma_G * conv.gamma_Fstar > 2.0 * norms.norm_AmV**2)
    if not precondition_ok and not allow_infeasible:
        raise PreconditionViolated(
            f"measured mismatch {norms.norm_AmV:.6g} too large for "
            f"gamma product {conv.gamma_G * conv.gamma_Fstar:.6g}; "
            "raise lambda2/eps or pass allow_infeasible"
        )
    sino_shape = (geom.n_angles, geom.n_bins)
    grad_shape = (m, n, 2)

    def objective(x):
        r = strip.apply(x) - z
        g = grad.apply(x).reshape(grad_shape)
        mag = np.sqrt(g[..., 0] ** 2 + g[..., 1] ** 2)
        return (
            0.5 * lambda0 * float(r @ r)
            + float(np.sum(_huber(mag, eps, lambda1)))
            + 0.5 * lambda2 * float(x @ x)
        )

    return Scenario(
        problem=SaddleProblem(
            prox_scaled_sqnorm(lambda2, m * n),
            prox_ct_dual_block(lambda0, z, lambda1, eps, (sino_shape, grad_shape)),
            forward,
            surrogate,
            conv,
        ),
        plan_hint={"planner": "classical", "kappa": 0.01},
        references={"phantom": image.ravel()},
        primal_objective=objective,
        expected_behavior="converges_linear",
        norms=norms,
        extras={
            "phantom": image,
            "sinogram_clean": clean.reshape(sino_shape),
            "z": z,
            "geometry": geom,
            "strip": strip,
            "line": line,
            "gradient": grad,
            "precondition_ok": precondition_ok,
            "lambda0": lambda0,
            "lambda1": lambda1,
            "lambda2": lambda2,
            "eps": eps,
        },
    )
