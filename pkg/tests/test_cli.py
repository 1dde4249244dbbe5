import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from tsirsia.cli import main
from tsirsia.io import load_incidence, write_incidence


def cfg(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def simulated(tmp_path_factory):
    """Four simulated years with one campaign in the second year."""
    d = tmp_path_factory.mktemp("sim")
    c = cfg(d, "sim.json", {"years": 4, "rho": 0.3, "campaigns": [[[40, 0.6], [41, 0.4]]]})
    assert main(["simulate", "--config", c, "--seed", "3", "--out", str(d / "out")]) == 0
    out = d / "out"
    # the first three years serve as training data
    write_incidence(out / "train.csv", load_incidence(out / "incidence.csv")[:36])
    return out


def test_simulate_deterministic(tmp_path, simulated):
    c = cfg(tmp_path, "sim.json", {"years": 4, "rho": 0.3, "campaigns": [[[40, 0.6], [41, 0.4]]]})
    assert main(["simulate", "--config", c, "--seed", "3", "--out", str(tmp_path / "again")]) == 0
    names = ["series.csv", "demography.csv", "incidence.csv", "calendar.csv", "truth.json", "manifest.txt"]
    for name in names:
        assert (tmp_path / "again" / name).read_bytes() == (simulated / name).read_bytes(), name
    assert main(["simulate", "--config", c, "--seed", "4", "--out", str(tmp_path / "other")]) == 0
    assert (tmp_path / "other" / "incidence.csv").read_bytes() != (simulated / "incidence.csv").read_bytes()


def test_manifest_contents(simulated):
    text = (simulated / "manifest.txt").read_text()
    assert text.startswith("command: simulate")
    assert "seed: 3" in text and "config_sha256: " in text
    assert "incidence.csv" in text


def test_usage_errors(tmp_path, capsys):
    assert main(["simulate", "--bogus", "--out", str(tmp_path)]) == 2
    assert main(["nonsense", "--out", str(tmp_path)]) == 2
    assert main(["simulate"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "invalid JSON" in capsys.readouterr().err
    c = cfg(tmp_path, "typo.json", {"yeers": 3})
    assert main(["simulate", "--config", c, "--out", str(tmp_path / "o")]) == 2
    assert "yeers" in capsys.readouterr().err
    assert main(["simulate", "--seed", "-1", "--out", str(tmp_path / "o")]) == 2


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "tsirsia", "fit", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 2
    assert "error:" in r.stderr


def test_fit_without_reporting_rate(tmp_path, simulated):
    c = cfg(tmp_path, "fit.json", {"demography": str(simulated / "demography.csv"),
                                   "incidence": str(simulated / "train.csv"),
                                   "calendar": str(simulated / "calendar.csv")})
    assert main(["fit", "--config", c, "--out", str(tmp_path / "fit")]) == 2


def test_stage1_fit_forecast_pipeline(tmp_path, simulated):
    common = {"demography": str(simulated / "demography.csv"), "incidence": str(simulated / "train.csv"),
              "calendar": str(simulated / "calendar.csv")}
    s1 = cfg(tmp_path, "s1.json", common)
    assert main(["stage1", "--config", s1, "--seed", "0", "--out", str(tmp_path / "s1")]) == 0
    st1 = json.loads((tmp_path / "s1" / "stage1.json").read_text())
    assert st1["window"] == [1, 19]
    assert st1["rho_lower95"] <= st1["rho_hat"] <= st1["rho_upper95"]

    fit = cfg(tmp_path, "fit.json", {**common, "stage1": str(tmp_path / "s1" / "stage1.json"),
                                     "mcmc": {"n_iter": 300, "n_burnin": 150}, "chains": [1, 2]})
    assert main(["fit", "--config", fit, "--out", str(tmp_path / "fit")]) == 0
    out = tmp_path / "fit"
    for name in ("draws_chain1.jsonl", "draws_chain2.jsonl", "trace_chain1.csv", "summary.csv",
                 "psrf.csv", "acceptance.json", "manifest.txt"):
        assert (out / name).exists(), name
    summary = {r["parameter"]: r for r in read_rows(out / "summary.csv")}
    assert {"gamma1", "p", "theta", "rho"} <= set(summary)
    rho = [float(json.loads(line)["rho"]) for line in open(out / "draws_chain1.jsonl")]
    assert len(set(rho)) > 1  # stage-1 uncertainty is propagated

    fc = cfg(tmp_path, "fc.json", {"draws": [str(out / "draws_chain1.jsonl"), str(out / "draws_chain2.jsonl")],
                                   "demography": str(simulated / "demography.csv"), "horizon": 24,
                                   "n_paths": 20})
    assert main(["forecast", "--config", fc, "--seed", "5", "--out", str(tmp_path / "fc")]) == 0
    rows = read_rows(tmp_path / "fc" / "forecast_I.csv")
    assert len(rows) == 24 and rows[0]["t"] == "73"
    lo, med, hi = (np.array([float(r[k]) for r in rows]) for k in ("lower95", "median", "upper95"))
    assert np.all(lo <= med) and np.all(med <= hi)
    assert len(read_rows(tmp_path / "fc" / "paths_I.csv")) == 20
    assert len(read_rows(tmp_path / "fc" / "forecast_reported.csv")) == 12

    first = (tmp_path / "fc" / "forecast_I.csv").read_bytes()
    assert main(["forecast", "--config", fc, "--seed", "5", "--out", str(tmp_path / "fc2")]) == 0
    assert (tmp_path / "fc2" / "forecast_I.csv").read_bytes() == first

    short = cfg(tmp_path, "short.json", {"draws": str(out / "draws_chain1.jsonl"),
                                         "demography": str(simulated / "demography.csv"), "horizon": 100})
    assert main(["forecast", "--config", short, "--out", str(tmp_path / "fc3")]) == 2


def test_fit_fixed_rho_single_chain(tmp_path, simulated):
    c = cfg(tmp_path, "fit.json", {"demography": str(simulated / "demography.csv"),
                                   "incidence": str(simulated / "train.csv"), "fixed_rho": 0.3,
                                   "mcmc": {"n_iter": 50, "n_burnin": 10}, "chains": [4]})
    assert main(["fit", "--config", c, "--out", str(tmp_path / "fit")]) == 0
    assert not (tmp_path / "fit" / "psrf.csv").exists()
    rho = {json.loads(line)["rho"] for line in open(tmp_path / "fit" / "draws_chain4.jsonl")}
    assert rho == {0.3}


def test_bias_study(tmp_path):
    c = cfg(tmp_path, "bias.json", {"years": 3, "rhos": [0.1], "windows": [12, 24], "replicates": 3})
    assert main(["bias-study", "--config", c, "--seed", "0", "--out", str(tmp_path / "b")]) == 0
    rows = read_rows(tmp_path / "b" / "bias.csv")
    assert [r["window_months"] for r in rows] == ["12", "24"]


def test_replicate_study_tables(tmp_path):
    c = cfg(tmp_path, "rep.json", {"years": 4, "rhos": [0.5], "train_months": 36,
                                   "campaigns": [[[40, 1.0]]],
                                   "mcmc": {"n_iter": 60, "n_burnin": 20}})
    assert main(["replicate-study", "--config", c, "--seed", "0", "--out", str(tmp_path / "r")]) == 0
    params = read_rows(tmp_path / "r" / "parameter_summary.csv")
    rmse = read_rows(tmp_path / "r" / "rmse.csv")
    assert {r["arm"] for r in rmse} == {"propagated", "fixed"}
    assert len(params) >= 2 * 8
    assert os.path.exists(tmp_path / "r" / "manifest.txt")
