"""Primal-dual saddle-point solver that tolerates a mismatched adjoint.

Provides the mismatched iteration and its accelerated variant, provably
convergent constant-stepsize planners with a runtime certificate, the
fixed-point error bound, closed-form quadratic testbeds, two divergence
counterexamples, and a small TV-regularized CT reconstruction experiment
with deliberately non-adjoint projector pairs.
"""

from . import analysis, operators, problems, prox, radon, solver, stepsize
from .errors import (
    BehaviorMismatch,
    ConditionViolated,
    Degenerate,
    GeometryError,
    InsufficientData,
    InvalidParameter,
    KappaOutOfRange,
    NonFiniteIterate,
    PdmmError,
    PreconditionViolated,
    SingularSystem,
    SolveFailed,
    Unavailable,
)
from .operators import (
    DenseMap,
    LinearMap,
    MismatchedPair,
    StackedMap,
    adjointness_defect,
    estimate_operator_norm,
    mismatch_norm,
)
from .prox import (
    ProxFn,
    prox_box_indicator,
    prox_ct_dual_block,
    prox_huber_tv_dual,
    prox_quadratic_dual,
    prox_scaled_sqnorm,
    prox_zero,
)
from .solver import (
    AccelState,
    IterateState,
    Reference,
    RunTrace,
    SaddleProblem,
    iterate_accelerated,
    solve,
    step_accelerated,
    step_mismatched,
)
from .stepsize import (
    CertificateReport,
    CertificateState,
    ConvexityData,
    NormData,
    StepPlan,
    advance_certificate,
    check_coupling_form_psd,
    initial_certificate,
    plan_classical,
    plan_general,
    plan_mismatched,
    plan_simple,
    verify_certificate,
)
from .analysis import (
    FixedPointPair,
    QuadraticProblem,
    RateEstimate,
    error_bound,
    estimate_linear_rate,
    quadratic_mismatched_fixed_point,
    quadratic_true_solution,
    verify_error_bound_on_random,
)
from .phantom import shepp_logan
from .problems import (
    Scenario,
    build_divergence_example,
    build_l1_counterexample,
    build_quadratic,
    build_tv_ct,
    gradient_op,
    plan_for_scenario,
    primal_objective,
)
from .radon import SinogramGeometry, radon_line, radon_strip

__version__ = "0.1.0"
