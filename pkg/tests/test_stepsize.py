import math

import numpy as np
import pytest

from pdmm.errors import (
    ConditionViolated,
    Degenerate,
    InvalidParameter,
    KappaOutOfRange,
    PreconditionViolated,
)
from pdmm.stepsize import (
    ConvexityData,
    NormData,
    StepPlan,
    advance_certificate,
    check_coupling_form_psd,
    coupling_form,
    initial_certificate,
    plan_classical,
    plan_general,
    plan_mismatched,
    plan_simple,
    verify_certificate,
)


def feasible_tuples(count, seed):
    """Random (gamma_G, gamma_Fstar, norm_V, norm_AmV, kappa) with
    gamma_Fstar * gamma_G > 2 ||A-V||^2 strictly."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        g1 = rng.uniform(0.05, 5.0)
        g2 = rng.uniform(0.05, 5.0)
        nv = rng.uniform(0.1, 10.0)
        cap = math.sqrt(g1 * g2 / 2.0)
        namv = rng.uniform(0.01, 0.95) * cap
        kappa = rng.uniform(0.02, 0.95)
        out.append((g1, g2, nv, namv, kappa))
    return out


# --- general planner -------------------------------------------------------


def test_general_zero_mismatch_formula():
    conv = ConvexityData(1.0, 1.0)
    plan = plan_general(conv, 1.0, 1.0, 1.0, 0.5, 0.5, NormData(1.0, 0.0))
    assert plan.tau == pytest.approx(math.sqrt(0.5))
    assert plan.sigma == pytest.approx(math.sqrt(0.5))
    assert plan.omega == pytest.approx(1.0 / (1.0 + 2.0 * math.sqrt(0.5)))


def test_general_with_auto_internals_passes_certificate():
    # desk-scale curvatures with the internals the automatic planner picks
    conv = ConvexityData(0.15, 1.0)
    norms = NormData(1.03, 0.05)
    auto = plan_mismatched(conv, 0.01, norms)
    plan = plan_general(
        conv, auto.mu_G, auto.mu_Fstar, auto.epsilon, auto.delta, auto.kappa, norms
    )
    assert plan.tau == pytest.approx(auto.tau, rel=1e-12)
    assert verify_certificate(plan, norms, conv, 1000).passed


def test_general_rejects_oversized_mu():
    conv = ConvexityData(1.0, 1.0)
    norms = NormData(1.0, 0.5)
    with pytest.raises(ConditionViolated) as err:
        plan_general(conv, 0.999, 0.5, 1.0, 0.5, 0.5, norms)
    assert err.value.condition == "cond-gammaG"


def test_general_parameter_guards():
    conv = ConvexityData(1.0, 1.0)
    norms = NormData(1.0, 0.1)
    with pytest.raises(InvalidParameter):
        plan_general(conv, 1.0, 1.0, 1.0, 0.6, 0.5, norms)  # delta > kappa
    with pytest.raises(InvalidParameter):
        plan_general(conv, 1.0, 1.0, -1.0, 0.5, 0.5, norms)


# --- automatic planner ------------------------------------------------------


def test_mismatched_planner_frozen_example():
    # gamma_G = gamma_Fstar = 1, ||A-V|| = 0.1, ||V|| = 1, kappa = 0.5:
    # b = min(0.5, 2*(0.5 - 0.01), 2 * 1e-4 * 2) = 4e-4, and both tau bounds
    # coincide at 25 (delta/(eps ||A-V||) = 0.5/(0.2*0.1) = 25).
    conv = ConvexityData(1.0, 1.0)
    norms = NormData(1.0, 0.1)
    plan = plan_mismatched(conv, 0.5, norms)
    assert plan.frac_G == pytest.approx(4e-4, rel=1e-12)
    assert plan.tau == pytest.approx(25.0, rel=1e-12)
    assert plan.sigma == pytest.approx(2 * 4e-4 * 25.0, rel=1e-12)
    assert plan.omega == pytest.approx(1.0 / 1.02, rel=1e-12)
    assert verify_certificate(plan, norms, conv, 1000).passed


def test_mismatched_planner_boundary_precondition():
    conv = ConvexityData(1.0, 1.0)
    norms = NormData(1.0, math.sqrt(0.5))  # gamma product == 2 ||A-V||^2
    with pytest.raises(PreconditionViolated):
        plan_mismatched(conv, 0.5, norms)


def test_mismatched_planner_zero_mismatch_degenerate():
    with pytest.raises(Degenerate):
        plan_mismatched(ConvexityData(1.0, 1.0), 0.5, NormData(1.0, 0.0))


# --- simple planner ---------------------------------------------------------


def test_simple_planner_values_and_certificate():
    conv = ConvexityData(1.0, 1.0)
    norms = NormData(1.0, 0.5)
    plan = plan_simple(conv, 0.25, norms)
    # the mismatch bound kappa*gamma_Fstar/(2||A-V||^2) = 0.5 binds below
    # the step bound sqrt(0.75); with it, omega = 1/(1 + tau gamma_G)
    assert plan.tau == pytest.approx(0.5, rel=1e-12)
    assert plan.sigma == pytest.approx(0.5, rel=1e-12)
    assert plan.omega == pytest.approx(1.0 / 1.5, rel=1e-12)
    assert verify_certificate(plan, norms, conv, 1000).passed


def test_simple_planner_kappa_bound():
    conv = ConvexityData(1.0, 1.0)
    norms = NormData(1.0, 0.5)
    # third bound: (0.25/1) * sqrt(2) == 0.3535...
    with pytest.raises(KappaOutOfRange) as err:
        plan_simple(conv, 0.4, norms)
    assert err.value.binding_bound == "step"


def test_simple_planner_zero_mismatch_degenerate():
    with pytest.raises(Degenerate):
        plan_simple(ConvexityData(1.0, 1.0), 0.1, NormData(1.0, 0.0))


def test_simple_equals_mismatched_when_fraction_is_half():
    for g1, g2, nv, namv, kappa in feasible_tuples(20, 123):
        conv = ConvexityData(g1, g2)
        norms = NormData(nv, namv)
        try:
            auto = plan_mismatched(conv, kappa, norms)
        except PreconditionViolated:
            continue
        if auto.frac_G != 0.5:
            continue
        try:
            simple = plan_simple(conv, kappa, norms)
        except KappaOutOfRange:
            # the simple planner's kappa range is sufficient, not necessary,
            # for the half-strength fraction; outside it there is nothing
            # to compare
            continue
        assert simple.tau == pytest.approx(auto.tau, rel=1e-12)
        assert simple.sigma == pytest.approx(auto.sigma, rel=1e-12)
        assert simple.omega == pytest.approx(auto.omega, rel=1e-12)


# --- classical planner ------------------------------------------------------


def test_classical_small_kappa_limit():
    plan = plan_classical(ConvexityData(1.0, 1.0), 1e-6, 1.0)
    assert plan.tau == pytest.approx(1.0, rel=1e-5)
    assert plan.sigma == pytest.approx(1.0, rel=1e-5)
    assert plan.omega == pytest.approx(1.0 / 3.0, rel=1e-5)


def test_classical_formula():
    plan = plan_classical(ConvexityData(4.0, 1.0), 0.5, 2.0)
    assert plan.tau == pytest.approx(math.sqrt(0.5 / 16.0), rel=1e-12)
    assert plan.sigma == pytest.approx(4 * plan.tau, rel=1e-12)


def test_classical_zero_norm_rejected():
    with pytest.raises(InvalidParameter):
        plan_classical(ConvexityData(1.0, 1.0), 0.5, 0.0)


def test_classical_certificate_vacuous_mismatch_condition():
    conv = ConvexityData(2.0, 0.5)
    plan = plan_classical(conv, 0.3, 1.7)
    report = verify_certificate(plan, NormData(1.7, 0.0), conv, 500)
    assert report.passed
    assert report.min_slack["cond-phi"] >= 0  # right side is zero


# --- certificate mechanics --------------------------------------------------


def test_advance_certificate_zero_moduli_freeze():
    plan = StepPlan(1.0, 1.0, 1.0, "manual", mu_G=0.0, mu_Fstar=0.0)
    state = initial_certificate(plan)
    nxt = advance_certificate(state, plan)
    assert nxt.primal_weight == state.primal_weight
    assert nxt.dual_weight == state.dual_weight
    assert nxt.iteration == 1


def test_advance_certificate_direct_recursion():
    plan = StepPlan(
        1.0, 1.0, 1.0 / 2.0, "manual", mu_G=0.5, mu_Fstar=0.5
    )
    state = advance_certificate(initial_certificate(plan), plan)
    assert state.primal_weight == pytest.approx(2.0)


def test_certificate_closed_form_growth():
    conv = ConvexityData(1.0, 1.0)
    norms = NormData(1.0, 0.1)
    plan = plan_mismatched(conv, 0.5, norms)
    growth = 1.0 + 2.0 * plan.tau * plan.mu_G
    state = initial_certificate(plan)
    for i in range(10):
        assert state.tested_step == pytest.approx(growth**i, rel=1e-12)
        nxt = advance_certificate(state, plan)
        assert state.tested_step / nxt.tested_step == pytest.approx(
            plan.omega, rel=1e-12
        )
        # self-adjointness identity at every step
        assert plan.omega * plan.sigma * nxt.dual_weight == pytest.approx(
            plan.tau * state.primal_weight, rel=1e-10
        )
        assert nxt.primal_weight >= state.primal_weight
        assert nxt.dual_weight >= state.dual_weight
        state = nxt


def test_certificate_detects_doubled_tau():
    conv = ConvexityData(1.0, 1.0)
    norms = NormData(1.0, 0.1)
    plan = plan_mismatched(conv, 0.5, norms)
    # double tau, keeping sigma and omega consistent with the recursions
    broken = StepPlan(
        2 * plan.tau,
        2 * plan.sigma,
        1.0 / (1.0 + 2.0 * 2 * plan.tau * plan.mu_G),
        "mismatched",
        kappa=plan.kappa,
        delta=plan.delta,
        epsilon=plan.epsilon,
        frac_G=plan.frac_G,
        frac_Fstar=plan.frac_Fstar,
        mu_G=plan.mu_G,
        mu_Fstar=plan.mu_Fstar,
    )
    report = verify_certificate(broken, norms, conv, 100)
    assert not report.passed
    assert report.first_violation.condition in ("cond-psi", "S-diag-dual", "cond-phi")


def test_certificate_fuzz_feasible_tuples():
    for g1, g2, nv, namv, kappa in feasible_tuples(50, 7):
        conv = ConvexityData(g1, g2)
        norms = NormData(nv, namv)
        plan = plan_mismatched(conv, kappa, norms)
        report = verify_certificate(plan, norms, conv, 1000)
        assert report.passed, (g1, g2, nv, namv, kappa, report.first_violation)
        # simple planner, with kappa clamped into its admissible range
        bound = min(
            0.5,
            1.0 - 2.0 * namv**2 / (g1 * g2),
            (namv**2 / nv) * math.sqrt(2.0 / (g1 * g2)),
        )
        simple = plan_simple(conv, min(kappa, 0.999 * bound), norms)
        assert verify_certificate(simple, norms, conv, 1000).passed
        for p in (plan, simple):
            assert p.tau > 0 and p.sigma > 0 and 0 < p.omega < 1


def test_certificate_rejects_infeasible_tuples():
    rng = np.random.default_rng(21)
    for _ in range(20):
        g1 = rng.uniform(0.05, 2.0)
        g2 = rng.uniform(0.05, 2.0)
        namv = math.sqrt(g1 * g2 / 2.0) * rng.uniform(1.0, 3.0)
        norms = NormData(rng.uniform(0.5, 5.0), namv)
        with pytest.raises(PreconditionViolated):
            plan_mismatched(ConvexityData(g1, g2), 0.5, norms)
        with pytest.raises(PreconditionViolated):
            plan_simple(ConvexityData(g1, g2), 0.25, norms)


def test_certificate_report_serialization():
    conv = ConvexityData(1.0, 1.0)
    norms = NormData(1.0, 0.1)
    report = verify_certificate(plan_mismatched(conv, 0.5, norms), norms, conv, 50)
    text = report.to_text()
    assert "passed True" in text
    assert "cond-psi" in text
    assert '"passed": true' in report.to_json()


def test_certificate_requires_internals():
    manual = StepPlan(0.5, 0.5, 1.0, "manual")
    with pytest.raises(InvalidParameter):
        verify_certificate(manual, NormData(1.0, 0.0), ConvexityData(0.0, 0.0), 10)


# --- coupling quadratic form -------------------------------------------------


def test_coupling_form_diagonal_psd():
    conv = ConvexityData(1.0, 1.0)
    norms = NormData(0.0, 0.0)
    ok, min_eig = check_coupling_form_psd(conv, 1.0, 1.0, norms, 0.0, 0.0, 1.0, 1.0)
    assert ok
    assert min_eig == pytest.approx(0.0, abs=1e-15)


def test_coupling_form_needs_strong_convexity_slack():
    # zero slack in both moduli with mismatch present: not PSD
    conv = ConvexityData(1.0, 2.0)
    norms = NormData(1.0, 0.3)
    ok, min_eig = check_coupling_form_psd(conv, 1.0, 2.0, norms, 1.0, 0.9, 1.0, 1.0)
    assert not ok and min_eig < -1e-10


def test_coupling_form_matches_eigensolver_oracle():
    rng = np.random.default_rng(17)
    for _ in range(20):
        conv = ConvexityData(rng.uniform(0.5, 3.0), rng.uniform(0.5, 3.0))
        norms = NormData(rng.uniform(0.1, 2.0), rng.uniform(0.0, 1.0))
        mu_G = rng.uniform(0.0, conv.gamma_G)
        mu_F = rng.uniform(0.0, conv.gamma_Fstar)
        eta_i = rng.uniform(0.1, 2.0)
        eta_ip1 = eta_i / rng.uniform(0.3, 1.0)
        phi_i = rng.uniform(0.1, 3.0)
        psi_ip1 = rng.uniform(0.1, 3.0)
        q = coupling_form(conv, mu_G, mu_F, norms, eta_i, eta_ip1, phi_i, psi_ip1)
        np.testing.assert_allclose(q, q.T)
        ok, min_eig = check_coupling_form_psd(
            conv, mu_G, mu_F, norms, eta_i, eta_ip1, phi_i, psi_ip1
        )
        oracle = np.linalg.eigvalsh(q)[0]
        assert min_eig == pytest.approx(oracle, abs=1e-12)
        assert ok == (oracle >= -1e-10)
