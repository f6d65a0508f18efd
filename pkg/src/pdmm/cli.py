"""Experiment CLI: reproduce every scenario from flags or a JSON config.

Subcommands: quadratic, counterexample, divergence, ct, certify.  Every run
is deterministic given (config, seed); artifacts are CSV/JSON/PGM.  Wall
times go to a separate timing.json so the deterministic artifacts stay
byte-identical across reruns.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from . import stepsize
from .analysis import error_bound, estimate_linear_rate
from .errors import (
    BehaviorMismatch,
    Degenerate,
    KappaOutOfRange,
    PdmmError,
    PreconditionViolated,
)
from .io import write_csv, write_image_csv, write_pgm
from .problems import (
    build_divergence_example,
    build_l1_counterexample,
    build_quadratic,
    build_tv_ct,
    plan_for_scenario,
)
from .radon import SinogramGeometry
from .solver import AccelState, IterateState, Reference, iterate_accelerated, solve, step_mismatched
from .stepsize import ConvexityData, NormData, plan_classical, plan_general, plan_mismatched, plan_simple

DEFAULTS = {
    "quadratic": {
        "n": 100,
        "m": 50,
        "alpha": 0.15,
        "beta": 1.0,
        "mismatch_scale": 0.05,
        "kappa": 0.01,
        "max_iter": 2000,
        "rel_tol": 1e-10,
        "seed": 0,
    },
    "counterexample": {
        "n": 5,
        "alpha_mm": 1.0,
        "tau": 0.5,
        "sigma": 0.5,
        "x0": 1.0,
        "y0": 1.0,
        "max_iter": 1000,
        "seed": 0,
    },
    "divergence": {
        "z": 1.0,
        "tau0": 0.5,
        "sigma0": 0.9,
        "n_iter": 10000,
        "seed": 0,
    },
    "ct": {
        "size": 64,
        "n_angles": 20,
        "n_bins": 90,
        "lambda0": 1.0,
        "lambda1": 1.2,
        "lambda1_sweep": "",
        "lambda2": 0.01,
        "eps": 0.01,
        "noise_rel": 0.15,
        "kappa": 0.01,
        "max_iter_mismatched": 5000,
        "max_iter_matched": 6000,
        "rel_tol": 1e-4,
        "seed": 0,
    },
    "certify": {
        "gamma_G": 1.0,
        "gamma_Fstar": 1.0,
        "norm_V": 1.0,
        "norm_AmV": 0.1,
        "kappa": 0.5,
        "n_iters": 1000,
        "scenario": "",
        "seed": 0,
    },
}


def _r12(value):
    """Round a float to 12 significant digits (byte-stable reports)."""
    if isinstance(value, float):
        return float(f"{value:.12e}")
    return value


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.floating,)):
        return _r12(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return _r12(obj) if isinstance(obj, float) else obj


def _write_report(out_dir, report):
    path = os.path.join(out_dir, "report.json")
    with open(path, "w") as fh:
        json.dump(_clean(report), fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _plan_summary(plan):
    return {
        "tau": plan.tau,
        "sigma": plan.sigma,
        "omega": plan.omega,
        "provenance": plan.provenance,
        "kappa": plan.kappa,
        "delta": plan.delta,
        "epsilon": plan.epsilon,
        "mu_G": plan.mu_G,
        "mu_Fstar": plan.mu_Fstar,
    }


def run_quadratic(cfg, out_dir):
    scenario = build_quadratic(
        cfg["n"], cfg["m"], cfg["alpha"], cfg["beta"], cfg["mismatch_scale"], cfg["seed"]
    )
    scenario.plan_hint["kappa"] = cfg["kappa"]
    plan = plan_for_scenario(scenario)
    refs = [
        Reference("u_hat", scenario.references["x_hat"], scenario.references["y_hat"]),
        Reference("x_hat", scenario.references["x_hat"]),
        Reference("x_star", scenario.references["x_star"]),
    ]
    trace = solve(
        scenario.problem,
        plan,
        np.zeros(cfg["n"]),
        np.zeros(cfg["m"]),
        cfg["max_iter"],
        cfg["rel_tol"],
        refs=refs,
        objective=scenario.primal_objective,
    )
    bound = error_bound(
        cfg["alpha"],
        scenario.problem.forward,
        scenario.problem.surrogate,
        scenario.references["y_hat"],
    )
    rate = estimate_linear_rate(trace, "u_hat", 0.5)
    cert = stepsize.verify_certificate(
        plan, scenario.norms, scenario.problem.conv, 1000
    )
    csv_path = os.path.join(out_dir, "trace.csv")
    n_rec = trace.n_recorded()
    write_csv(
        csv_path,
        ["iter", "residual", "dist_x_hat", "dist_x_star", "bound", "objective"],
        [
            trace.iterations,
            trace.residuals,
            trace.ref_distances["x_hat"],
            trace.ref_distances["x_star"],
            [bound] * n_rec,
            trace.objectives,
        ],
    )
    report = {
        "experiment": "quadratic",
        "config": cfg,
        "norms": {"norm_V": scenario.norms.norm_V, "norm_AmV": scenario.norms.norm_AmV},
        "plan": _plan_summary(plan),
        "termination": trace.termination,
        "iterations": n_rec,
        "final": {
            "dist_u_hat": trace.ref_distances["u_hat"][-1],
            "dist_x_hat": trace.ref_distances["x_hat"][-1],
            "dist_x_star": trace.ref_distances["x_star"][-1],
            "objective": trace.objectives[-1],
            "error_bound": bound,
        },
        "rate": {
            "empirical_log_rate": rate.empirical_log_rate,
            "theoretical_log_rate": rate.theoretical_log_rate,
            "r_squared": rate.r_squared,
            "tail_start": rate.tail_start,
        },
        "certificate_passed": cert.passed,
        "artifacts": ["trace.csv", "report.json"],
    }
    _write_report(out_dir, report)
    return report


def run_counterexample(cfg, out_dir):
    scenario = build_l1_counterexample(
        cfg["n"], cfg["alpha_mm"], cfg["tau"], cfg["sigma"], cfg["x0"], cfg["y0"]
    )
    plan = plan_for_scenario(scenario)
    state = IterateState(scenario.extras["x0"], scenario.extras["y0"], scenario.extras["x0"], 0)
    expected_inc = cfg["alpha_mm"] * cfg["tau"]
    rows = {"iter": [], "min_increment": [], "norm_x": [], "saturated": []}
    monotone = True
    saturation_iter = None
    max_inc_err_after_sat = 0.0
    for _ in range(cfg["max_iter"]):
        new = step_mismatched(state, plan, scenario.problem)
        inc = new.x - state.x
        rows["iter"].append(new.iteration)
        rows["min_increment"].append(float(inc.min()))
        rows["norm_x"].append(float(np.linalg.norm(new.x)))
        saturated = bool(np.all(state.y >= 1.0))
        rows["saturated"].append(int(saturated))
        if inc.min() <= 0:
            monotone = False
        if saturated:
            if saturation_iter is None:
                saturation_iter = state.iteration
            max_inc_err_after_sat = max(
                max_inc_err_after_sat, float(np.abs(inc - expected_inc).max())
            )
        state = new
    write_csv(
        os.path.join(out_dir, "trace.csv"),
        ["iter", "min_increment", "norm_x", "saturated"],
        [rows["iter"], rows["min_increment"], rows["norm_x"], rows["saturated"]],
    )
    report = {
        "experiment": "counterexample",
        "config": cfg,
        "monotone_increase": monotone,
        "saturation_iteration": saturation_iter,
        "expected_increment": expected_inc,
        "max_increment_error_after_saturation": max_inc_err_after_sat,
        "final_norm_x": rows["norm_x"][-1],
        "artifacts": ["trace.csv", "report.json"],
    }
    _write_report(out_dir, report)
    if not monotone:
        raise BehaviorMismatch("counterexample did not increase monotonically")
    return report


def run_divergence(cfg, out_dir):
    scenario = build_divergence_example(cfg["z"], cfg["tau0"], cfg["sigma0"])
    x0, y0 = scenario.extras["x0"], scenario.extras["y0"]
    state = AccelState(x0, y0, x0, cfg["tau0"], cfg["sigma0"], scenario.extras["gamma"], 0)
    taus, norm_x, y_err = [], [], []

    def record(before, after):
        taus.append(before.tau)
        norm_x.append(float(np.linalg.norm(after.x)))
        y_err.append(float(np.abs(after.y - y0).max()))

    iterate_accelerated(scenario.problem, state, cfg["n_iter"], record)
    iters = list(range(1, cfg["n_iter"] + 1))
    write_csv(
        os.path.join(out_dir, "trace.csv"),
        ["iter", "tau", "norm_x", "y_drift"],
        [iters, taus, norm_x, y_err],
    )
    idx = np.arange(cfg["n_iter"], dtype=float)
    tau_bound_ok = bool(
        np.all(np.asarray(taus) >= 1.0 / (idx + 1.0 / cfg["tau0"]) - 1e-15)
    )
    y_pinned = max(y_err) <= 1e-12
    stationary = cfg["z"] == 0
    if stationary:
        behavior_ok = norm_x[-1] == 0.0
    else:
        growth = norm_x[-1] / norm_x[min(99, len(norm_x) - 1)]
        behavior_ok = (
            bool(np.all(np.diff(norm_x) > 0)) and growth > 1.5 and tau_bound_ok and y_pinned
        )
    report = {
        "experiment": "divergence",
        "config": cfg,
        "stationary": stationary,
        "y_pinned_at_minus_z": y_pinned,
        "max_y_drift": max(y_err),
        "tau_lower_bound_holds": tau_bound_ok,
        "norm_x_at_100": norm_x[min(99, len(norm_x) - 1)],
        "norm_x_final": norm_x[-1],
        "behavior_ok": behavior_ok,
        "artifacts": ["trace.csv", "report.json"],
    }
    _write_report(out_dir, report)
    if not behavior_ok:
        raise BehaviorMismatch("divergence example did not behave as documented")
    return report


def _ct_single(cfg, scenario, matched, out_dir, tag):
    prob = scenario.matched_problem() if matched else scenario.problem
    plan = plan_classical(
        prob.conv, cfg["kappa"], scenario.norms.norm_V
    )
    phantom = scenario.extras["phantom"]
    refs = [Reference("phantom", phantom.ravel())]
    max_iter = cfg["max_iter_matched"] if matched else cfg["max_iter_mismatched"]
    rel_tol = 1e-9 if matched else cfg["rel_tol"]
    t0 = time.perf_counter()
    trace = solve(
        prob,
        plan,
        np.zeros(prob.forward.cols),
        np.zeros(prob.forward.rows),
        max_iter,
        rel_tol,
        refs=refs,
        objective=scenario.primal_objective,
    )
    elapsed = time.perf_counter() - t0
    norm_ph = float(np.linalg.norm(phantom))
    rel_dist = [d / norm_ph for d in trace.ref_distances["phantom"]]
    write_csv(
        os.path.join(out_dir, f"trace_{tag}.csv"),
        ["iter", "residual", "rel_dist_phantom", "objective"],
        [trace.iterations, trace.residuals, rel_dist, trace.objectives],
    )
    recon = trace.final_state.x.reshape(phantom.shape)
    write_pgm(os.path.join(out_dir, f"recon_{tag}.pgm"), recon)
    write_pgm(os.path.join(out_dir, f"error_{tag}.pgm"), np.abs(recon - phantom))
    write_image_csv(os.path.join(out_dir, f"recon_{tag}.csv"), recon)
    return {
        "tag": tag,
        "plan": _plan_summary(plan),
        "termination": trace.termination,
        "iterations": trace.n_recorded(),
        "final_residual": trace.residuals[-1],
        "final_rel_dist_phantom": rel_dist[-1],
        "final_objective": trace.objectives[-1],
        "objectives": trace.objectives,
        "mean_ms_per_iter": 1000.0 * elapsed / trace.n_recorded(),
    }


def run_ct(cfg, out_dir):
    if cfg.get("lambda1_sweep"):
        values = [float(tok) for tok in str(cfg["lambda1_sweep"]).split(",")]
        rows = []
        for lam1 in values:
            sub_cfg = dict(cfg, lambda1=lam1, lambda1_sweep="")
            sub_dir = os.path.join(out_dir, f"lam_{lam1:g}")
            os.makedirs(sub_dir, exist_ok=True)
            sub_report = run_ct(sub_cfg, sub_dir)
            rows.append(
                {
                    "lambda1": lam1,
                    "matched_final_objective": sub_report["matched"]["final_objective"],
                    "mismatched_final_objective": sub_report["mismatched"][
                        "final_objective"
                    ],
                    "precondition_ok": sub_report["precondition"]["ok"],
                    "report": f"lam_{lam1:g}/report.json",
                }
            )
        report = {
            "experiment": "ct",
            "config": cfg,
            "sweep_rows": rows,
            "artifacts": ["report.json"] + [r["report"] for r in rows],
        }
        _write_report(out_dir, report)
        return report
    geom = SinogramGeometry(cfg["n_angles"], cfg["n_bins"])
    scenario = build_tv_ct(
        cfg["size"],
        cfg["size"],
        geom,
        cfg["lambda0"],
        cfg["lambda1"],
        cfg["lambda2"],
        cfg["eps"],
        cfg["noise_rel"],
        cfg["seed"],
        allow_infeasible=True,
    )
    write_pgm(os.path.join(out_dir, "phantom.pgm"), scenario.extras["phantom"])
    write_image_csv(os.path.join(out_dir, "phantom.csv"), scenario.extras["phantom"])
    sino = scenario.extras["z"].reshape(cfg["n_angles"], cfg["n_bins"])
    write_csv(
        os.path.join(out_dir, "sinogram.csv"),
        [f"bin_{k}" for k in range(cfg["n_bins"])],
        [sino[:, k] for k in range(cfg["n_bins"])],
    )
    mismatched = _ct_single(cfg, scenario, False, out_dir, "mismatched")
    matched = _ct_single(cfg, scenario, True, out_dir, "matched")
    timing = {
        "mean_ms_per_iter_mismatched": mismatched.pop("mean_ms_per_iter"),
        "mean_ms_per_iter_matched": matched.pop("mean_ms_per_iter"),
    }
    with open(os.path.join(out_dir, "timing.json"), "w") as fh:
        json.dump(timing, fh, indent=2)
        fh.write("\n")
    matched_obj = matched.pop("objectives")
    mismatched.pop("objectives")
    half = len(matched_obj) // 2
    tail_increases = np.diff(np.asarray(matched_obj[half:]))
    report = {
        "experiment": "ct",
        "config": cfg,
        "norms": {
            "norm_V": scenario.norms.norm_V,
            "norm_AmV": scenario.norms.norm_AmV,
        },
        "precondition": {
            "ok": scenario.extras["precondition_ok"],
            "gamma_product": scenario.problem.conv.gamma_G
            * scenario.problem.conv.gamma_Fstar,
            "required_above": 2.0 * scenario.norms.norm_AmV**2,
            "hint": None
            if scenario.extras["precondition_ok"]
            else "increase lambda2/eps to certify stepsizes",
        },
        "mismatched": mismatched,
        "matched": matched,
        "matched_minimizes_better": matched["final_objective"]
        <= mismatched["final_objective"],
        "matched_tail_max_objective_increase": float(tail_increases.max())
        if tail_increases.size
        else 0.0,
        "artifacts": [
            "phantom.pgm",
            "phantom.csv",
            "sinogram.csv",
            "trace_mismatched.csv",
            "trace_matched.csv",
            "recon_mismatched.pgm",
            "recon_matched.pgm",
            "recon_mismatched.csv",
            "recon_matched.csv",
            "error_mismatched.pgm",
            "error_matched.pgm",
            "timing.json",
            "report.json",
        ],
    }
    _write_report(out_dir, report)
    return report


def _certify_general(conv, kappa, norms):
    """Feasibility search for the general planner over modulus fractions."""
    grid = np.linspace(0.05, 0.95, 15)
    if norms.norm_AmV == 0:
        try:
            plan = plan_general(
                conv, conv.gamma_G, conv.gamma_Fstar, 1.0, kappa, kappa, norms
            )
            return plan, None
        except PdmmError as exc:
            return None, type(exc).__name__
    for b in grid:
        for a in grid:
            try:
                plan = plan_general(
                    conv,
                    b * conv.gamma_G,
                    a * conv.gamma_Fstar,
                    norms.norm_AmV / ((1.0 - a) * conv.gamma_Fstar),
                    kappa,
                    kappa,
                    norms,
                )
                return plan, None
            except PdmmError:
                continue
    return None, "infeasible over the searched modulus fractions"


def run_certify(cfg, out_dir):
    if cfg.get("scenario") == "quadratic":
        # certify against a built scenario's measured quantities
        q = DEFAULTS["quadratic"]
        sc = build_quadratic(
            q["n"], q["m"], q["alpha"], q["beta"], q["mismatch_scale"], cfg["seed"]
        )
        conv, norms = sc.problem.conv, sc.norms
        cfg = dict(
            cfg,
            gamma_G=conv.gamma_G,
            gamma_Fstar=conv.gamma_Fstar,
            norm_V=norms.norm_V,
            norm_AmV=norms.norm_AmV,
        )
    elif cfg.get("scenario"):
        raise PdmmError(f"unknown certify scenario {cfg['scenario']!r}")
    conv = ConvexityData(cfg["gamma_G"], cfg["gamma_Fstar"])
    norms = NormData(cfg["norm_V"], cfg["norm_AmV"])
    kappa = cfg["kappa"]
    n_iters = cfg["n_iters"]
    results = {}

    def attempt(name, fn):
        try:
            plan = fn()
        except (PreconditionViolated, Degenerate, KappaOutOfRange, PdmmError) as exc:
            results[name] = {"error": type(exc).__name__, "detail": str(exc)}
            return
        cert = stepsize.verify_certificate(plan, norms, conv, n_iters)
        entry = {"plan": _plan_summary(plan), "certificate_passed": cert.passed}
        if cert.first_violation is not None:
            entry["first_violation"] = {
                "condition": cert.first_violation.condition,
                "iteration": cert.first_violation.iteration,
                "slack": cert.first_violation.slack,
            }
        results[name] = entry

    attempt("mismatched", lambda: plan_mismatched(conv, kappa, norms))
    attempt("simple", lambda: plan_simple(conv, kappa, norms))
    plan, err = _certify_general(conv, kappa, norms)
    if plan is None:
        results["general"] = {"error": "ConditionViolated", "detail": err}
    else:
        cert = stepsize.verify_certificate(plan, norms, conv, n_iters)
        results["general"] = {
            "plan": _plan_summary(plan),
            "certificate_passed": cert.passed,
        }
    attempt("classical", lambda: plan_classical(conv, kappa, norms.norm_V))
    if norms.norm_AmV == 0 and "plan" in results.get("classical", {}):
        results["classical"]["note"] = "exact adjoint: classical stepsizes apply"
    report = {
        "experiment": "certify",
        "config": cfg,
        "planners": results,
        "artifacts": ["report.json"],
    }
    _write_report(out_dir, report)
    lines = []
    for name, entry in results.items():
        if "error" in entry:
            lines.append(f"{name}: {entry['error']}")
        else:
            p = entry["plan"]
            lines.append(
                f"{name}: tau={p['tau']:.6g} sigma={p['sigma']:.6g} "
                f"omega={p['omega']:.6g} certificate_passed={entry['certificate_passed']}"
            )
    with open(os.path.join(out_dir, "planners.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return report


RUNNERS = {
    "quadratic": run_quadratic,
    "counterexample": run_counterexample,
    "divergence": run_divergence,
    "ct": run_ct,
    "certify": run_certify,
}


def _add_subparser(subparsers, name):
    sub = subparsers.add_parser(name, help=f"run the {name} experiment")
    sub.add_argument("--out", default=f"out/{name}", help="output directory")
    sub.add_argument("--config", default=None, help="JSON config file")
    for key, default in DEFAULTS[name].items():
        flag = "--" + key.lower().replace("_", "-")
        sub.add_argument(flag, dest=key, type=type(default), default=None)
    return sub


def resolve_config(name, args):
    """defaults < config file < explicit flags."""
    cfg = dict(DEFAULTS[name])
    if args.config is not None:
        with open(args.config) as fh:
            loaded = json.load(fh)
        if "config" in loaded and isinstance(loaded["config"], dict):
            loaded = loaded["config"]  # accept a previous report for round-trips
        loaded.pop("experiment", None)
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ValueError(f"unknown config keys for {name}: {sorted(unknown)}")
        cfg.update(loaded)
    for key in DEFAULTS[name]:
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    cfg["experiment"] = name
    return cfg


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="pdmm", description="mismatched-adjoint primal-dual experiments"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in DEFAULTS:
        _add_subparser(subparsers, name)
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args.command, args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    cfg_no_tag = {k: v for k, v in cfg.items() if k != "experiment"}
    try:
        report = RUNNERS[args.command](cfg_no_tag, args.out)
    except BehaviorMismatch as exc:
        print(f"behavior mismatch: {exc}", file=sys.stderr)
        return 1
    except PdmmError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    print(f"{args.command}: report written to {os.path.join(args.out, 'report.json')}")
    for key in ("termination", "certificate_passed", "behavior_ok", "monotone_increase"):
        if key in report:
            print(f"  {key}: {report[key]}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
