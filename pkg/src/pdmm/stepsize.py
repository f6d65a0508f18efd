"""Constant-stepsize planners and the runtime step-length certificate.

Each planner returns a :class:`StepPlan` whose internals (test moduli
mu_G / mu_Fstar, epsilon, delta, kappa) are sufficient to re-verify, at
runtime, every scalar step-length condition that the convergence analysis
needs.  ``verify_certificate`` evolves the test sequences and checks the
conditions at every iteration, so a plan is never trusted on faith.
"""

import json
import math
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from .errors import (
    ConditionViolated,
    Degenerate,
    InvalidParameter,
    KappaOutOfRange,
    PreconditionViolated,
)

__all__ = [
    "ConvexityData",
    "NormData",
    "StepPlan",
    "CertificateState",
    "CertificateReport",
    "plan_general",
    "plan_mismatched",
    "plan_simple",
    "plan_classical",
    "initial_certificate",
    "advance_certificate",
    "verify_certificate",
    "coupling_form",
    "check_coupling_form_psd",
    "CONDITIONS",
]

# Names of the scalar conditions checked by the certificate.
COND_ADJOINT = "adjointpd"
COND_PSI = "cond-psi"
COND_PHI = "cond-phi"
COND_GAMMA_G = "cond-gammaG"
COND_GAMMA_FSTAR = "cond-gammaFstar"
COND_S_PRIMAL = "S-diag-primal"
COND_S_DUAL = "S-diag-dual"
CONDITIONS = (
    COND_ADJOINT,
    COND_PSI,
    COND_PHI,
    COND_GAMMA_G,
    COND_GAMMA_FSTAR,
    COND_S_PRIMAL,
    COND_S_DUAL,
)

_REL_TOL = 1e-10


@dataclass(frozen=True)
class ConvexityData:
    """Strong-convexity moduli of G and F*."""

    gamma_G: float
    gamma_Fstar: float

    def __post_init__(self):
        if self.gamma_G < 0 or self.gamma_Fstar < 0:
            raise InvalidParameter("strong-convexity moduli must be >= 0")


@dataclass(frozen=True)
class NormData:
    """Measured operator norms: ||V|| and the mismatch ||A - V||."""

    norm_V: float
    norm_AmV: float

    def __post_init__(self):
        if self.norm_V < 0 or self.norm_AmV < 0:
            raise InvalidParameter("operator norms must be >= 0")


@dataclass(frozen=True)
class StepPlan:
    """Constant stepsizes (tau, sigma, omega) plus planner internals.

    For non-manual plans omega = 1/(1 + 2 tau mu_G) and
    sigma mu_Fstar = tau mu_G hold by construction; frac_G and frac_Fstar
    are the fractions b, a of the strong-convexity moduli used as test
    moduli (mu_G = b gamma_G, mu_Fstar = a gamma_Fstar).
    """

    tau: float
    sigma: float
    omega: float
    provenance: str
    kappa: Optional[float] = None
    delta: Optional[float] = None
    epsilon: Optional[float] = None
    frac_G: Optional[float] = None
    frac_Fstar: Optional[float] = None
    mu_G: Optional[float] = None
    mu_Fstar: Optional[float] = None

    def __post_init__(self):
        if self.tau <= 0 or self.sigma <= 0:
            raise InvalidParameter("tau and sigma must be positive")
        if not (0 < self.omega <= 1):
            raise InvalidParameter("omega must lie in (0, 1]")
        if self.provenance != "manual":
            expected = 1.0 / (1.0 + 2.0 * self.tau * self.mu_G)
            if abs(self.omega - expected) > 1e-12 * expected:
                raise InvalidParameter("omega must equal 1/(1 + 2 tau mu_G)")
            balance = abs(self.sigma * self.mu_Fstar - self.tau * self.mu_G)
            if balance > 1e-12 * max(self.tau * self.mu_G, 1e-300):
                raise InvalidParameter("need sigma mu_Fstar = tau mu_G")

    def has_certificate_data(self):
        return None not in (
            self.kappa,
            self.delta,
            self.epsilon,
            self.mu_G,
            self.mu_Fstar,
        )

    def as_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class CertificateState:
    """Test-sequence scalars at one iteration.

    primal_weight and dual_weight weight the primal/dual blocks of the
    test operator; tested_step = primal_weight * tau = dual_weight * sigma.
    """

    primal_weight: float
    dual_weight: float
    tested_step: float
    iteration: int


def initial_certificate(plan):
    """Start values: primal_weight = 1/tau, dual_weight = 1/sigma, so the
    tested step begins at 1."""
    return CertificateState(1.0 / plan.tau, 1.0 / plan.sigma, 1.0, 0)


def advance_certificate(state, plan):
    """One step of the test-sequence recursion:

    primal_weight' = primal_weight (1 + 2 tau mu_G)
    dual_weight'   = dual_weight (1 + 2 sigma mu_Fstar)
    tested_step'   = primal_weight' * tau
    """
    phi = state.primal_weight * (1.0 + 2.0 * plan.tau * plan.mu_G)
    psi = state.dual_weight * (1.0 + 2.0 * plan.sigma * plan.mu_Fstar)
    return CertificateState(phi, psi, phi * plan.tau, state.iteration + 1)


@dataclass(frozen=True)
class Violation:
    condition: str
    iteration: int
    slack: float


@dataclass
class CertificateReport:
    passed: bool
    n_iters: int
    first_violation: Optional[Violation]
    min_slack: dict

    def to_json(self):
        payload = {
            "passed": self.passed,
            "n_iters": self.n_iters,
            "first_violation": (
                None
                if self.first_violation is None
                else asdict(self.first_violation)
            ),
            "min_slack": self.min_slack,
        }
        return json.dumps(payload, sort_keys=True, indent=2)

    def to_text(self):
        lines = [f"passed {self.passed} n_iters {self.n_iters}"]
        for name in CONDITIONS:
            lines.append(f"{name} min_slack {self.min_slack[name]:.6e}")
        if self.first_violation is not None:
            v = self.first_violation
            lines.append(
                f"violation {v.condition} iteration {v.iteration} slack {v.slack:.6e}"
            )
        return "\n".join(lines)


def _rel_slack(lhs, rhs):
    """Signed slack (lhs - rhs), normalized by the magnitude of the sides."""
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return (lhs - rhs) / scale


def verify_certificate(plan, norms, conv, n_iters):
    """Evolve the test sequences for n_iters steps and check, at every step:

    - the self-adjointness identity omega sigma dual_weight' = tau primal_weight
      (to 1e-10 relative),
    - the dual test-weight bound against ||V||,
    - the primal test-weight bound against epsilon/delta and ||A - V||,
    - both strong-convexity conditions with the plan's omega,
    - nonnegativity of the two diagonal terms of the descent-slack operator.

    Violations are report entries, not exceptions; the report carries the
    first violated condition with iteration index and (relative) slack.

    The test sequences grow geometrically by a common factor, and every
    condition is invariant under jointly rescaling them, so the state is
    renormalized after each step to keep the arithmetic in range.
    """
    if not plan.has_certificate_data():
        raise InvalidParameter("plan lacks certificate internals (manual plan?)")
    if n_iters < 1:
        raise InvalidParameter("n_iters must be >= 1")
    nv, namv = norms.norm_V, norms.norm_AmV
    kappa, delta, eps = plan.kappa, plan.delta, plan.epsilon
    mu_G, mu_F = plan.mu_G, plan.mu_Fstar
    omega, tau, sigma = plan.omega, plan.tau, plan.sigma

    min_slack = {name: math.inf for name in CONDITIONS}
    first = None
    state = initial_certificate(plan)
    for _ in range(n_iters):
        nxt = advance_certificate(state, plan)
        phi_i = state.primal_weight
        eta_i = state.tested_step
        psi_ip1 = nxt.dual_weight

        checks = [
            (
                COND_ADJOINT,
                _REL_TOL
                - abs(_rel_slack(omega * sigma * psi_ip1, tau * phi_i)),
            ),
            (
                COND_PSI,
                _rel_slack(psi_ip1, eta_i**2 * nv**2 / (phi_i * (1.0 - kappa))),
            ),
            (COND_PHI, _rel_slack(phi_i, (eps / delta) * eta_i * namv)),
            (
                COND_GAMMA_G,
                _rel_slack(conv.gamma_G, (eps / (2.0 * omega)) * namv + mu_G),
            ),
            (
                COND_GAMMA_FSTAR,
                _rel_slack(
                    conv.gamma_Fstar, ((1.0 + omega) / (2.0 * eps)) * namv + mu_F
                ),
            ),
            (COND_S_PRIMAL, _rel_slack(delta * phi_i, eps * eta_i * namv)),
            (
                COND_S_DUAL,
                _rel_slack(psi_ip1, eta_i**2 * nv**2 / (phi_i * (1.0 - kappa))),
            ),
        ]
        for name, slack in checks:
            min_slack[name] = min(min_slack[name], slack)
            if slack < -_REL_TOL and first is None:
                first = Violation(name, state.iteration, slack)
        if first is not None:
            break
        # Renormalize so the geometric growth never overflows.
        scale = 1.0 / nxt.primal_weight
        state = CertificateState(
            nxt.primal_weight * scale,
            nxt.dual_weight * scale,
            nxt.tested_step * scale,
            nxt.iteration,
        )
    return CertificateReport(first is None, n_iters, first, min_slack)


def _tau_from_min(delta, epsilon, mu_G, mu_Fstar, kappa, norms):
    """tau = min( delta / (epsilon ||A-V||), sqrt((1-kappa) mu_Fstar / (||V||^2 mu_G)) )

    with either term +inf when its denominator vanishes."""
    left = (
        math.inf
        if norms.norm_AmV == 0
        else delta / (epsilon * norms.norm_AmV)
    )
    right = (
        math.inf
        if norms.norm_V == 0
        else math.sqrt((1.0 - kappa) * mu_Fstar / (norms.norm_V**2 * mu_G))
    )
    tau = min(left, right)
    if not math.isfinite(tau):
        raise InvalidParameter("both stepsize bounds are infinite (zero norms)")
    return tau


def _check_strong_convexity_conditions(conv, mu_G, mu_Fstar, epsilon, omega, norms):
    lhs_G = conv.gamma_G
    rhs_G = (epsilon / (2.0 * omega)) * norms.norm_AmV + mu_G
    if _rel_slack(lhs_G, rhs_G) < -1e-12:
        raise ConditionViolated(COND_GAMMA_G)
    lhs_F = conv.gamma_Fstar
    rhs_F = ((1.0 + omega) / (2.0 * epsilon)) * norms.norm_AmV + mu_Fstar
    if _rel_slack(lhs_F, rhs_F) < -1e-12:
        raise ConditionViolated(COND_GAMMA_FSTAR)


def plan_general(conv, mu_G, mu_Fstar, epsilon, delta, kappa, norms):
    """General constant-step planner: the caller supplies the test moduli
    and the (epsilon, delta, kappa) certificate parameters.

    tau is the minimum of the mismatch bound delta/(epsilon ||A-V||) (infinite
    at zero mismatch) and the step bound sqrt((1-kappa) mu_Fstar/(||V||^2 mu_G));
    sigma = (mu_G/mu_Fstar) tau and omega = 1/(1 + 2 tau mu_G).  Both
    strong-convexity conditions are re-checked with the computed omega.
    """
    if not (0 < delta <= kappa < 1):
        raise InvalidParameter("need 0 < delta <= kappa < 1")
    if mu_G <= 0 or mu_Fstar <= 0:
        raise InvalidParameter("test moduli must be positive")
    if epsilon <= 0:
        raise InvalidParameter("epsilon must be positive")
    tau = _tau_from_min(delta, epsilon, mu_G, mu_Fstar, kappa, norms)
    sigma = (mu_G / mu_Fstar) * tau
    omega = 1.0 / (1.0 + 2.0 * tau * mu_G)
    _check_strong_convexity_conditions(conv, mu_G, mu_Fstar, epsilon, omega, norms)
    return StepPlan(
        tau,
        sigma,
        omega,
        "general",
        kappa=kappa,
        delta=delta,
        epsilon=epsilon,
        frac_G=mu_G / conv.gamma_G if conv.gamma_G > 0 else None,
        frac_Fstar=mu_Fstar / conv.gamma_Fstar if conv.gamma_Fstar > 0 else None,
        mu_G=mu_G,
        mu_Fstar=mu_Fstar,
    )


def _mismatched_fraction(conv, kappa, norms):
    """The modulus fraction b used by the automatic planner."""
    gg = conv.gamma_G * conv.gamma_Fstar
    t2 = (1.0 / kappa) * (0.5 - norms.norm_AmV**2 / gg)
    t3 = (
        math.inf
        if norms.norm_V == 0
        else ((1.0 - kappa) / kappa**2)
        * (norms.norm_AmV**4 / norms.norm_V**2)
        * (2.0 / gg)
    )
    return min(0.5, t2, t3)


def plan_mismatched(conv, kappa, norms):
    """Automatic planner for the strongly convex mismatched setting.

    Requires gamma_Fstar * gamma_G > 2 ||A-V||^2.  Internally chooses
    a = 1/2, b = min(1/2, feasibility bounds), mu_G = b gamma_G,
    mu_Fstar = gamma_Fstar / 2, epsilon = ||A-V|| / ((1-a) gamma_Fstar),
    delta = kappa, and then takes tau as the two-term minimum of the
    general planner (the derivation picks b so the mismatch bound is the
    binding one; the explicit minimum also covers configurations where the
    b = 1/2 cap or the feasibility bound binds instead, which keeps the
    certificate satisfied for every admissible input).
    """
    if not (0 < kappa < 1):
        raise InvalidParameter("kappa must lie in (0, 1)")
    gg = conv.gamma_G * conv.gamma_Fstar
    if gg <= 2.0 * norms.norm_AmV**2:
        raise PreconditionViolated(
            f"need gamma_Fstar * gamma_G > 2 ||A-V||^2 "
            f"(got {gg:.6g} <= {2.0 * norms.norm_AmV ** 2:.6g})"
        )
    if norms.norm_AmV == 0:
        raise Degenerate(
            "zero mismatch collapses the modulus fraction; use plan_classical"
        )
    a = 0.5
    b = _mismatched_fraction(conv, kappa, norms)
    mu_G = b * conv.gamma_G
    mu_Fstar = a * conv.gamma_Fstar
    epsilon = norms.norm_AmV / ((1.0 - a) * conv.gamma_Fstar)
    delta = kappa
    tau = _tau_from_min(delta, epsilon, mu_G, mu_Fstar, kappa, norms)
    sigma = (mu_G / mu_Fstar) * tau
    omega = 1.0 / (1.0 + 2.0 * tau * mu_G)
    return StepPlan(
        tau,
        sigma,
        omega,
        "mismatched",
        kappa=kappa,
        delta=delta,
        epsilon=epsilon,
        frac_G=b,
        frac_Fstar=a,
        mu_G=mu_G,
        mu_Fstar=mu_Fstar,
    )


def plan_simple(conv, kappa, norms):
    """Simplified parameter choice: both test moduli at half strength.

    Valid for kappa in (0, min(1/2, 1 - 2||A-V||^2/(gamma_Fstar gamma_G),
    ||A-V||^2/||V|| * sqrt(2/(gamma_Fstar gamma_G)))]; equivalent to
    plan_mismatched whenever the latter's modulus fraction evaluates to 1/2.
    """
    gg = conv.gamma_G * conv.gamma_Fstar
    if gg <= 2.0 * norms.norm_AmV**2:
        raise PreconditionViolated(
            f"need gamma_Fstar * gamma_G > 2 ||A-V||^2 "
            f"(got {gg:.6g} <= {2.0 * norms.norm_AmV ** 2:.6g})"
        )
    if norms.norm_AmV == 0:
        raise Degenerate("zero mismatch forces kappa -> 0; use plan_classical")
    bounds = {
        "half": 0.5,
        "feasibility": 1.0 - 2.0 * norms.norm_AmV**2 / gg,
        "step": (
            math.inf
            if norms.norm_V == 0
            else (norms.norm_AmV**2 / norms.norm_V) * math.sqrt(2.0 / gg)
        ),
    }
    binding = min(bounds, key=bounds.get)
    if not (0 < kappa <= bounds[binding]):
        raise KappaOutOfRange(binding, bounds[binding])
    a = b = 0.5
    mu_G = b * conv.gamma_G
    mu_Fstar = a * conv.gamma_Fstar
    epsilon = norms.norm_AmV / ((1.0 - a) * conv.gamma_Fstar)
    delta = kappa
    tau = _tau_from_min(delta, epsilon, mu_G, mu_Fstar, kappa, norms)
    sigma = (conv.gamma_G / conv.gamma_Fstar) * tau
    omega = 1.0 / (1.0 + tau * conv.gamma_G)
    return StepPlan(
        tau,
        sigma,
        omega,
        "simple",
        kappa=kappa,
        delta=delta,
        epsilon=epsilon,
        frac_G=b,
        frac_Fstar=a,
        mu_G=mu_G,
        mu_Fstar=mu_Fstar,
    )


def plan_classical(conv, kappa, norm_V):
    """Exact-adjoint planner: full test moduli, no mismatch terms.

    tau = sqrt((1-kappa) gamma_Fstar / (||V||^2 gamma_G)),
    sigma = (gamma_G/gamma_Fstar) tau, omega = 1/(1 + 2 tau gamma_G).
    """
    if conv.gamma_G <= 0 or conv.gamma_Fstar <= 0:
        raise InvalidParameter("classical plan needs both moduli positive")
    if not (0 < kappa < 1):
        raise InvalidParameter("kappa must lie in (0, 1)")
    if norm_V <= 0:
        raise InvalidParameter("norm_V must be positive")
    tau = math.sqrt((1.0 - kappa) * conv.gamma_Fstar / (norm_V**2 * conv.gamma_G))
    sigma = (conv.gamma_G / conv.gamma_Fstar) * tau
    omega = 1.0 / (1.0 + 2.0 * tau * conv.gamma_G)
    return StepPlan(
        tau,
        sigma,
        omega,
        "classical",
        kappa=kappa,
        delta=kappa,
        epsilon=1.0,
        frac_G=1.0,
        frac_Fstar=1.0,
        mu_G=conv.gamma_G,
        mu_Fstar=conv.gamma_Fstar,
    )


def coupling_form(conv, mu_G, mu_Fstar, norms, eta_i, eta_ip1, phi_i, psi_ip1):
    """The symmetric 4x4 quadratic-form matrix coupling the fixed-point
    errors (primal, dual) and the step differences (primal, dual).

    Its positive semidefiniteness is what the one-sided strong convexity
    analysis would need; with mismatch present it fails as soon as either
    test modulus uses up the full strong convexity.
    """
    e = norms.norm_AmV
    v = norms.norm_V
    return np.array(
        [
            [eta_i * (conv.gamma_G - mu_G), -0.5 * eta_ip1 * e, 0.0, 0.0],
            [
                -0.5 * eta_ip1 * e,
                eta_ip1 * (conv.gamma_Fstar - mu_Fstar),
                -0.5 * eta_i * e,
                0.0,
            ],
            [0.0, -0.5 * eta_i * e, phi_i, -eta_i * v],
            [0.0, 0.0, -eta_i * v, psi_ip1],
        ]
    )


def check_coupling_form_psd(conv, mu_G, mu_Fstar, norms, eta_i, eta_ip1, phi_i, psi_ip1):
    """(is_psd, min_eigenvalue) of the coupling quadratic form."""
    q = coupling_form(conv, mu_G, mu_Fstar, norms, eta_i, eta_ip1, phi_i, psi_ip1)
    min_eig = float(np.linalg.eigvalsh(q)[0])
    return min_eig >= -1e-10, min_eig
