import json
import math

import numpy as np
import pytest

import adacont


def test_laminar_state_is_a_fixed_point():
    p = adacont.WaleffeProblem(re=400.0, ny=16, nz=16)
    lam = p.laminar_state()
    for dt2 in (0.5, 2.0, 10.0):
        assert adacont.convergence_metric(p, p.default_preconditioner(dt2), lam) < 1e-12
    assert abs(p.n_u(lam) - 1.0) < 1e-12


def test_conduction_state_and_divergence():
    p = adacont.DdcProblem(nx=16, nz=12)
    c = p.conduction_state()
    spec = adacont.PreconditionerSpec.uniform(p, 0.06)
    assert adacont.convergence_metric(p, spec, c) < 1e-10
    assert p.kinetic_energy(c) == 0.0
    assert np.max(np.abs(p.divergence(p.random_state(3, 1.0)))) < 1e-10


def test_jacobian_matches_differences():
    p = adacont.DdcProblem(nx=12, nz=12)
    spec = adacont.PreconditionerSpec.uniform(p, 0.06)
    u, d = p.random_state(1, 2.0), p.random_state(2, 1.0)
    eps = 1e-6
    fd = (adacont.residual_action(p, spec, u + eps * d) - adacont.residual_action(p, spec, u - eps * d)) / (2 * eps)
    jd = adacont.jacobian_action(p, spec, u, d)
    assert np.linalg.norm(jd - fd) / np.linalg.norm(fd) < 1e-5


def test_wrong_length_is_rejected():
    p = adacont.ToyProblem("sqrt", 1.0)
    with pytest.raises(ValueError):
        adacont.residual_action(p, adacont.PreconditionerSpec.uniform(p, 1.0), np.zeros(3))


def test_bicgstab_matrix_and_callable():
    rng = np.random.default_rng(0)
    a = np.eye(20) + 0.1 * rng.standard_normal((20, 20)) / math.sqrt(20)
    b = rng.standard_normal(20)
    for op in (a, lambda x: a @ x):
        r = adacont.bicgstab(op, b, rel_tol=1e-10)
        assert r["status"] == "converged"
        assert np.allclose(r["x"], np.linalg.solve(a, b), atol=1e-8)


def test_trace_sqrt_to_four():
    p = adacont.ToyProblem("sqrt", 1.0)
    res = adacont.trace_branch(
        p, adacont.PreconditionerSpec.uniform(p, 1.0), np.array([1.0]), 1.0,
        config={"newton_tol": 1e-12, "krylov_tol": 1e-10, "delta_lambda_max": 0.5},
        lambda_max=4.0, states=True)
    assert res["status"] == "completed"
    assert res["points"][-1]["lambda"] == 4.0
    for q in res["points"]:
        assert abs(q["state"][0] - math.sqrt(q["lambda"])) < 1e-8


def test_snapshot_round_trip(tmp_path):
    p = adacont.DdcProblem(nx=10, nz=8)
    s = p.random_state(5, 2.0)
    adacont.write_snapshot(tmp_path / "s.snap", p, s)
    back = adacont.read_snapshot(tmp_path / "s.snap")
    assert back["state"].tobytes() == s.tobytes()
    assert back["problem"] == "ddc2d"
    assert back["parameters"]["Ra"] == 2000.0


def test_run_writes_branch_csv(tmp_path):
    cfg = {
        "problem": {"name": "toy", "kind": "sqrt", "lambda": 1.0},
        "seed": {"state": [1.0]},
        "continuation": {"newton_tol": 1e-12, "krylov_tol": 1e-10, "delta_lambda_max": 0.5},
        "stop": {"lambda_max": 4.0},
        "output": {"directory": str(tmp_path)},
    }
    assert adacont.run(cfg)["status"] == "completed"
    last = (tmp_path / "branch.csv").read_text().strip().splitlines()[-1].split(",")
    assert float(last[1]) == 4.0 and abs(float(last[2]) - 2.0) < 1e-8
    cfg["bogus"] = 1
    with pytest.raises(ValueError):
        adacont.run(cfg)


def test_sweep_rows(tmp_path):
    cfg = {
        "problem": {"name": "toy", "kind": "sqrt", "lambda": 1.0, "linear": -1.0},
        "seed": {"state": [1.0]},
        "stop": {"lambda_max": 2.0},
        "output": {"directory": str(tmp_path)},
    }
    rows = adacont.sweep(cfg, [0.5, 5.0])
    assert [r["status"] for r in rows] == ["converged", "converged"]
    assert (tmp_path / "sweep.csv").exists()


def test_verify_reports_every_check(tmp_path):
    results = adacont.verify(tmp_path)
    assert len(results) == 9
    assert all(r["passed"] for r in results), json.dumps(results, indent=1)
