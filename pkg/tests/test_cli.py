import json
import os

import numpy as np
import pytest

from pdmm.cli import DEFAULTS, main

FAST_CT = [
    "--size", "32", "--n-angles", "6", "--n-bins", "40",
    "--max-iter-mismatched", "150", "--max-iter-matched", "200",
]


def read(path):
    with open(path, "rb") as fh:
        return fh.read()


def test_quadratic_run_and_determinism(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    args = ["quadratic", "--n", "40", "--m", "25", "--max-iter", "500", "--seed", "3"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert read(out1 / "report.json") == read(out2 / "report.json")
    assert read(out1 / "trace.csv") == read(out2 / "trace.csv")
    report = json.loads(read(out1 / "report.json"))
    assert report["termination"] == "converged"
    assert report["certificate_passed"] is True
    # final distance to the true solution is below the bound column
    rows = (out1 / "trace.csv").read_text().strip().splitlines()
    header = rows[0].split(",")
    last = rows[-1].split(",")
    dist = float(last[header.index("dist_x_star")])
    bound = float(last[header.index("bound")])
    assert dist <= bound


def test_quadratic_zero_mismatch_columns_coincide(tmp_path):
    out = tmp_path / "zero"
    assert (
        main(
            [
                "quadratic", "--n", "30", "--m", "18", "--mismatch-scale", "0",
                "--max-iter", "400", "--out", str(out),
            ]
        )
        == 0
    )
    rows = (out / "trace.csv").read_text().strip().splitlines()
    header = rows[0].split(",")
    i_hat = header.index("dist_x_hat")
    i_star = header.index("dist_x_star")
    for row in rows[1:]:
        cells = row.split(",")
        assert cells[i_hat] == cells[i_star]


def test_config_round_trip(tmp_path):
    out1 = tmp_path / "r1"
    out2 = tmp_path / "r2"
    assert main(["quadratic", "--n", "25", "--m", "15", "--out", str(out1)]) == 0
    # re-run from the embedded config of the previous report
    assert main(
        ["quadratic", "--config", str(out1 / "report.json"), "--out", str(out2)]
    ) == 0
    assert read(out1 / "report.json") == read(out2 / "report.json")


def test_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["quadratic", "--config", str(cfg), "--out", str(tmp_path / "x")]) == 2


def test_counterexample_exit_zero_on_expected_divergence(tmp_path):
    out = tmp_path / "ce"
    assert main(["counterexample", "--max-iter", "200", "--out", str(out)]) == 0
    report = json.loads(read(out / "report.json"))
    assert report["monotone_increase"] is True
    assert report["max_increment_error_after_saturation"] <= 1e-12


def test_divergence_run_artifacts(tmp_path):
    out = tmp_path / "dv"
    assert main(["divergence", "--n-iter", "1500", "--out", str(out)]) == 0
    report = json.loads(read(out / "report.json"))
    assert report["behavior_ok"] is True
    assert report["y_pinned_at_minus_z"] is True
    lines = (out / "trace.csv").read_text().strip().splitlines()
    assert lines[0] == "iter,tau,norm_x,y_drift"
    assert len(lines) == 1501


def test_divergence_zero_data_stationary(tmp_path):
    out = tmp_path / "dv0"
    assert main(["divergence", "--z", "0", "--n-iter", "200", "--out", str(out)]) == 0
    report = json.loads(read(out / "report.json"))
    assert report["stationary"] is True
    assert report["norm_x_final"] == 0.0


def test_ct_run_artifacts_and_determinism(tmp_path):
    out1 = tmp_path / "ct1"
    out2 = tmp_path / "ct2"
    assert main(["ct", *FAST_CT, "--out", str(out1)]) == 0
    assert main(["ct", *FAST_CT, "--out", str(out2)]) == 0
    report = json.loads(read(out1 / "report.json"))
    for name in report["artifacts"]:
        assert (out1 / name).exists()
    # deterministic artifacts are byte-identical; timing.json may differ
    for name in report["artifacts"]:
        if name == "timing.json":
            continue
        assert read(out1 / name) == read(out2 / name), name
    assert report["precondition"]["ok"] is False
    assert report["precondition"]["hint"]
    assert report["matched_minimizes_better"] is True
    # PGM header sanity
    head = read(out1 / "recon_matched.pgm")[:15].decode("ascii", "replace")
    assert head.startswith("P5\n32 32\n255")


def test_ct_lambda1_sweep(tmp_path):
    out = tmp_path / "sweep"
    fast = [f if f != "150" else "60" for f in FAST_CT]
    fast = [f if f != "200" else "60" for f in fast]
    assert main(
        ["ct", *fast, "--lambda1-sweep", "0.6,1.2,2.4", "--out", str(out)]
    ) == 0
    report = json.loads(read(out / "report.json"))
    assert len(report["sweep_rows"]) == 3
    assert [r["lambda1"] for r in report["sweep_rows"]] == [0.6, 1.2, 2.4]
    for row in report["sweep_rows"]:
        assert (out / row["report"]).exists()


def test_certify_feasible_and_infeasible(tmp_path):
    out = tmp_path / "cert1"
    assert main(["certify", "--out", str(out)]) == 0
    report = json.loads(read(out / "report.json"))
    assert report["planners"]["mismatched"]["certificate_passed"] is True
    assert report["planners"]["general"]["certificate_passed"] is True
    # infeasible for the automatic planners, feasible for none or general
    out2 = tmp_path / "cert2"
    assert main(
        [
            "certify", "--gamma-g", "0.1", "--gamma-fstar", "0.1",
            "--norm-amv", "0.5", "--out", str(out2),
        ]
    ) == 0
    report2 = json.loads(read(out2 / "report.json"))
    assert report2["planners"]["mismatched"]["error"] == "PreconditionViolated"
    assert report2["planners"]["simple"]["error"] == "PreconditionViolated"
    # zero mismatch: classical plan with a note
    out3 = tmp_path / "cert3"
    assert main(["certify", "--norm-amv", "0", "--out", str(out3)]) == 0
    report3 = json.loads(read(out3 / "report.json"))
    assert report3["planners"]["classical"]["certificate_passed"] is True
    assert "note" in report3["planners"]["classical"]


def test_certify_general_only_window(tmp_path):
    # gamma product 1 with ||A-V|| = 0.8: the automatic planners reject
    # (1 <= 2 * 0.64) but small test moduli still admit a certified plan
    out = tmp_path / "window"
    assert main(["certify", "--norm-amv", "0.8", "--out", str(out)]) == 0
    report = json.loads(read(out / "report.json"))
    assert report["planners"]["mismatched"]["error"] == "PreconditionViolated"
    assert report["planners"]["simple"]["error"] == "PreconditionViolated"
    assert report["planners"]["general"]["certificate_passed"] is True


def test_defaults_cover_all_flags():
    for name, defaults in DEFAULTS.items():
        for key in defaults:
            assert key.replace("_", "-")  # flags derive from keys
