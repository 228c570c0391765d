import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdsweight.bootstrap import salganik_bootstrap
from rdsweight.cli import main
from rdsweight.estimators import (
    estimate_mean,
    estimate_sh,
    estimate_ss,
    estimate_vh,
    estimate_wsh,
)
from rdsweight.io import write_recruitment_csv
from rdsweight.network import NetworkTargets, generate_network, solve_block_probabilities
from rdsweight.sampler import SamplingConfig, draw_rds_sample
from rdsweight.study import (
    InclusionConfig,
    MseCell,
    StudyCondition,
    benchmark_conditions,
    inclusion_for_sample,
    misspecification_sweep,
    run_estimation,
    run_simulation_study,
)
from rdsweight.rng import stream

FAST = InclusionConfig(resamples=50, pi_draws=50, pi_iterations=2)


def small_condition(name="small", reps=3, h=2.0, da=2.0, re=(0.9, 0.6), n=40):
    return StudyCondition(
        name,
        NetworkTargets(200, 0.2, 6, h, da),
        SamplingConfig(n, n_seeds=4, n_coupons=2, recruitment_effectiveness=re),
        reps,
    )


@pytest.fixture(scope="module")
def field_sample():
    t = NetworkTargets(600, 0.3, 7, 1.5, 1.5)
    net = generate_network(solve_block_probabilities(t), t, 1)
    s = draw_rds_sample(net, SamplingConfig(120, n_seeds=6, n_coupons=3), 2)
    rng = np.random.default_rng(0)
    hcv = rng.integers(0, 2, size=len(s)).astype(float)
    hcv[rng.choice(len(s), 10, replace=False)] = np.nan
    return s.with_traits({"hiv": s.traits["z"], "hcv": hcv})


def test_study_is_deterministic():
    cond = small_condition(reps=2)
    a = run_simulation_study([cond], master_seed=5, inclusion=FAST)
    b = run_simulation_study([cond], master_seed=5, inclusion=FAST)
    assert a.to_csv() == b.to_csv()
    assert a.to_json() == b.to_json()
    assert a.replicates_csv() == b.replicates_csv()
    c = run_simulation_study([cond], master_seed=6, inclusion=FAST)
    assert c.replicates_csv() != a.replicates_csv()


def test_cells_do_not_depend_on_other_conditions():
    solo = run_simulation_study([small_condition("a")], master_seed=1, inclusion=FAST)
    other = small_condition("b", re=(1.0, 1.0))
    both = run_simulation_study([small_condition("a"), other], master_seed=1, inclusion=FAST)
    for est in ("mean", "wsh"):
        assert np.array_equal(solo.cell("a", est).estimates, both.cell("a", est).estimates)


def test_table_rows_agree_with_replicates():
    table = run_simulation_study([small_condition()], master_seed=2, inclusion=FAST)
    lines = table.replicates_csv().splitlines()[1:]
    for cell in table.cells:
        values = [float(r.split(",")[4]) for r in lines if r.split(",")[2] == cell.estimator]
        assert np.array_equal(values, cell.estimates)
        assert cell.mse == pytest.approx(cell.bias**2 + cell.variance, abs=1e-12)
    payload = json.loads(table.to_json())
    assert payload["metadata"]["master_seed"] == 2
    assert {r["estimator"] for r in payload["cells"]} == {"mean", "vh", "ss", "sh", "wsh"}


@settings(max_examples=100, deadline=None)
@given(
    values=st.lists(st.floats(0, 1), min_size=1, max_size=200),
    truth=st.floats(0, 1),
)
def test_mse_identity(values, truth):
    cell = MseCell("c", "e", np.array(values), truth)
    assert cell.mse >= 0
    assert abs(cell.mse - (cell.bias**2 + cell.variance)) < 1e-12


def test_sweep_identity_with_main_study():
    cond = small_condition(reps=2)
    main_table = run_simulation_study([cond], master_seed=3, inclusion=FAST)
    sweep = misspecification_sweep(cond, (0.5, 1.0, 1.5), master_seed=3, inclusion=FAST)
    assert np.array_equal(
        sweep.cell(cond.name, "wsh", 1.0).estimates, main_table.cell(cond.name, "wsh").estimates
    )
    assert {c.multiplier for c in sweep.cells} == {0.5, 1.0, 1.5}


def test_sweep_skips_population_below_sample(caplog):
    cond = small_condition(reps=1, n=150)
    sweep = misspecification_sweep(cond, (0.5, 1.0), master_seed=0, inclusion=FAST)
    assert [c.multiplier for c in sweep.cells] == [1.0]
    assert "skipped" in caplog.text


def test_condition_serialisation():
    for cond in benchmark_conditions(5):
        assert StudyCondition.from_dict(cond.to_dict()) == cond
    assert len({c.name for c in benchmark_conditions()}) == 7
    with pytest.raises(ValueError):
        StudyCondition("x", NetworkTargets(10, 0.2, 2), SamplingConfig(20, 1), 1)


def test_estimation_mean_only(field_sample):
    report = run_estimation(field_sample, ["hiv"], ["mean"], n_boot=0)
    (entry,) = report["results"]
    assert entry["estimate"] == pytest.approx(float(np.mean(field_sample.traits["hiv"])))
    assert report["errors"] == []


def test_estimation_reports_missing_population(field_sample):
    report = run_estimation(field_sample, ["hiv"], ["mean", "ss"], n_coupons=3, n_boot=100)
    assert [r["estimator"] for r in report["results"]] == ["mean"]
    (err,) = report["errors"]
    assert err["estimator"] == "ss" and "population size" in err["error"]


def test_estimation_matches_direct_calls(field_sample):
    n_pop, n_c, seed = 2000, 3, 11
    report = run_estimation(
        field_sample, ["hiv", "hcv"], population_size=n_pop, n_coupons=n_c,
        n_boot=300, seed=seed, inclusion=FAST,
    )
    assert report["errors"] == []
    inc = inclusion_for_sample(field_sample, n_pop, n_c, FAST, seed)
    direct = {
        "mean": lambda t: estimate_mean(field_sample, t),
        "vh": lambda t: estimate_vh(field_sample, t),
        "ss": lambda t: estimate_ss(field_sample, t, pi=inc),
        "sh": lambda t: estimate_sh(field_sample, t),
        "wsh": lambda t: estimate_wsh(field_sample, t, inclusion=inc),
    }
    for entry in report["results"]:
        ref = direct[entry["estimator"]](entry["trait"])
        assert entry["estimate"] == ref.estimate
        assert entry["intermediates"] == ref.intermediates
        assert ("degenerate" in entry["flags"]) == ref.degenerate
    ti = 1
    boot = salganik_bootstrap(
        field_sample, "hcv", "wsh", inc, 300, 0.05,
        np.random.SeedSequence(seed, spawn_key=(1, ti)), n_c,
    )
    (wsh_hcv,) = [r for r in report["results"] if r["trait"] == "hcv" and r["estimator"] == "wsh"]
    assert wsh_hcv["se"] == boot.se
    assert (wsh_hcv["ci_lo"], wsh_hcv["ci_hi"]) == boot.ci


def test_inclusion_seed_is_stream_zero(field_sample):
    a = inclusion_for_sample(field_sample, 1500, 3, FAST, 4)
    from rdsweight.inclusion import estimate_inclusion

    b = estimate_inclusion(field_sample.degrees, 1500, 3, resamples=50, pi_draws=50,
                           pi_iterations=2, random_state=stream(4, 0))
    assert np.array_equal(a.q_hat, b.q_hat)


# --- command line --------------------------------------------------------------

def test_cli_estimate(tmp_path, field_sample, capsys):
    csv_path = tmp_path / "sample.csv"
    write_recruitment_csv(field_sample, csv_path)
    out = tmp_path / "report.json"
    code = main([
        "estimate", str(csv_path), "-N", "2000", "--coupons", "3", "--seed", "3",
        "--bootstrap-reps", "200", "-M", "50", "--output", str(out),
        "--replicates", str(tmp_path / "reps.csv"), "--dump-inclusion", str(tmp_path / "inc"),
    ])
    assert code == 0
    report = json.loads(out.read_text())
    assert len(report["results"]) == 10
    assert all(r["ci_lo"] <= r["ci_hi"] for r in report["results"])
    assert (tmp_path / "inc_edges.csv").read_text().startswith("k,l,W,q_hat")
    assert (tmp_path / "inc_nodes.csv").exists()
    assert len((tmp_path / "reps.csv").read_text().splitlines()) == 1 + 10 * 200
    again = tmp_path / "again.json"
    main([
        "estimate", str(csv_path), "-N", "2000", "--coupons", "3", "--seed", "3",
        "--bootstrap-reps", "200", "-M", "50", "--output", str(again),
    ])
    assert again.read_text() == out.read_text()


def test_cli_seed_from_environment(tmp_path, field_sample, monkeypatch):
    csv_path = tmp_path / "sample.csv"
    write_recruitment_csv(field_sample, csv_path)
    args = ["estimate", str(csv_path), "-N", "2000", "--coupons", "3",
            "--estimators", "ss", "--bootstrap-reps", "0", "-M", "20"]
    monkeypatch.setenv("RDSWEIGHT_SEED", "9")
    main(args + ["--output", str(tmp_path / "env.json")])
    main(args + ["--seed", "9", "--output", str(tmp_path / "flag.json")])
    main(args + ["--seed", "10", "--output", str(tmp_path / "other.json")])
    env = json.loads((tmp_path / "env.json").read_text())
    flag = json.loads((tmp_path / "flag.json").read_text())
    other = json.loads((tmp_path / "other.json").read_text())
    assert env["results"] == flag["results"]
    assert env["results"] != other["results"]


def test_cli_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("id,recruiter_id,degree\na,b,2\n")
    assert main(["estimate", str(bad)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["estimate", str(tmp_path / "nope.csv")]) == 2
    good = tmp_path / "good.csv"
    good.write_text("id,recruiter_id,degree,z\na,,2,1\nb,a,3,0\nc,a,1,1\n")
    assert main(["estimate", str(good), "--estimators", "ss", "--bootstrap-reps", "0",
                 "--output", str(tmp_path / "r.json")]) == 1


def test_cli_simulate_and_sweep(tmp_path):
    config = {
        "master_seed": 4,
        "inclusion": {"resamples": 30, "pi_draws": 30, "pi_iterations": 2},
        "conditions": [small_condition(reps=2).to_dict()],
        "sweep": {"condition": "small", "multipliers": [0.75, 1.0]},
    }
    path = tmp_path / "study.json"
    path.write_text(json.dumps(config))
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(path), "--output-dir", str(out)]) == 0
    first = (out / "mse.csv").read_text()
    assert main(["simulate", "--config", str(path), "--output-dir", str(out)]) == 0
    assert (out / "mse.csv").read_text() == first
    assert json.loads((out / "mse.json").read_text())["metadata"]["master_seed"] == 4
    assert main(["sweep-n", "--config", str(path), "--output-dir", str(out)]) == 0
    sweep = (out / "sweep.csv").read_text().splitlines()
    assert len(sweep) == 3
    wsh_main = [r for r in first.splitlines() if ",wsh," in r][0].split(",")[3]
    wsh_sweep = [r for r in sweep if r.split(",")[1] == "1.0"][0].split(",")[3]
    assert wsh_main == wsh_sweep


def test_cli_inclusion_dump(tmp_path, field_sample):
    csv_path = tmp_path / "sample.csv"
    write_recruitment_csv(field_sample, csv_path)
    prefix = tmp_path / "diag"
    assert main(["inclusion", str(csv_path), "-N", "900", "--coupons", "3", "-M", "40",
                 "--output", str(prefix)]) == 0
    rows = (tmp_path / "diag_nodes.csv").read_text().splitlines()
    assert rows[0] == "k,N_hat,pi_hat,g_hat"
    assert sum(int(r.split(",")[1]) for r in rows[1:]) == 900
