import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from tempest.cli import main
from tempest.diagnostics import STANDARD_Z_GRID, empirical_lt, sup_gap
from tempest.scenario import bundled_scenarios, load_scenario
from tempest.stable import StableParams, ps_laplace
from tempest.tempered import PtsParams, pts_laplace
from tempest.tempering import TemperingFunction as Q

E_SQRT_PI = math.exp(-math.sqrt(math.pi))


def write(tmp_path, doc, name="s.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def rows(path):
    lines = [l for l in path.read_text().splitlines() if not l.startswith("#")]
    return list(csv.DictReader(lines))


def dist(**kw):
    return {"version": 1, "distribution": kw}


def test_bundled_scenarios_present_and_valid():
    names = bundled_scenarios()
    for stem in ("stable_doa", "thm42_finite_c", "thm42_infinite", "thm42_zero_floor", "thm42_zero_exp",
                 "thm47_finite_c", "thm47_infinite", "thm47_zero_floor", "thm47_zero_exp",
                 "dts_embedding", "natural_scale"):
        assert stem + ".json" in names
    for n in names:
        load_scenario(n)


def test_ds_transform_values(tmp_path):
    sc = write(tmp_path, dist(family="ds", alpha=0.5, eta=0.5) | {"grid": [0.0, 0.5, 1.0]})
    assert main(["transform", "--scenario", sc, "--out", str(tmp_path / "o")]) == 0
    r = rows(tmp_path / "o" / "transform.csv")
    assert float(r[0]["value"]) == pytest.approx(E_SQRT_PI, rel=1e-15)
    assert r[2]["value"] == "1.0"


def test_pts_identity_transform_matches_stable(tmp_path):
    sc = write(tmp_path, dist(family="pts", alpha=0.5, eta=0.5, q={"kind": "identity"}))
    assert main(["transform", "--scenario", sc, "--out", str(tmp_path)]) == 0
    for r in rows(tmp_path / "transform.csv"):
        z = float(r["grid_point"])
        assert float(r["value"]) == pytest.approx(ps_laplace(StableParams(0.5, 0.5), z), rel=1e-10)


def test_dts_transform_at_zero(tmp_path):
    sc = write(tmp_path, dist(family="dts", alpha=0.5, eta=0.5, q={"kind": "exponential", "params": {"a": 1.0}})
               | {"grid": [0.0, 1.0]})
    assert main(["transform", "--scenario", sc, "--out", str(tmp_path)]) == 0
    r = rows(tmp_path / "transform.csv")
    assert float(r[0]["value"]) == pytest.approx(math.exp(-math.sqrt(math.pi) * (math.sqrt(2) - 1)), rel=1e-10)
    assert r[1]["value"] == "1.0"


def test_transform_quadrature_failure_names_point(tmp_path, capsys):
    doc = dist(family="pts", alpha=0.5, eta=0.5, q={"kind": "truncation", "params": {"a": 1.0}})
    doc |= {"grid": [3.0], "quadrature": {"rel_tol": 1e-15, "abs_tol": 1e-300, "max_subdivisions": 1}}
    assert main(["transform", "--scenario", write(tmp_path, doc), "--out", str(tmp_path)]) == 1
    assert "grid point 3.0" in capsys.readouterr().err


def test_pmf_command(tmp_path):
    sc = write(tmp_path, dist(family="dts", alpha=0.5, eta=0.5, q={"kind": "identity"}) | {"n_max": 300})
    assert main(["pmf", "--scenario", sc, "--out", str(tmp_path)]) == 0
    text = (tmp_path / "pmf.csv").read_text()
    tail = float(text.split("# tail_mass=")[1].splitlines()[0])
    p = [float(r["p_n"]) for r in rows(tmp_path / "pmf.csv")]
    assert p[0] == pytest.approx(E_SQRT_PI, abs=1e-8)
    assert sum(p) + tail == pytest.approx(1.0, abs=1e-10)


def test_pmf_zero_eta_single_row(tmp_path):
    sc = write(tmp_path, dist(family="ds", alpha=0.5, eta=0.0))
    assert main(["pmf", "--scenario", sc, "--out", str(tmp_path)]) == 0
    assert rows(tmp_path / "pmf.csv") == [{"n": "0", "p_n": "1.0"}]


def test_sample_zero_eta(tmp_path):
    sc = write(tmp_path, dist(family="ds", alpha=0.5, eta=0.0) | {"count": 5})
    assert main(["sample", "--scenario", sc, "--seed", "3", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "samples.txt").read_text().splitlines()
    assert [l for l in lines if not l.startswith("#")] == ["0"] * 5
    assert "# seed=3" in lines and any(l.startswith("# scenario=") for l in lines)


def test_sample_pts_passes_sup_gap(tmp_path):
    sc = write(tmp_path, dist(family="pts", alpha=0.5, eta=0.5, q={"kind": "exponential", "params": {"a": 1.0}})
               | {"count": 50_000})
    assert main(["sample", "--scenario", sc, "--seed", "17", "--out", str(tmp_path)]) == 0
    x = np.loadtxt(tmp_path / "samples.txt", comments="#")
    target = pts_laplace(PtsParams(0.5, Q.exponential(1.0), 0.5), np.asarray(STANDARD_Z_GRID))
    assert sup_gap(empirical_lt(x), target).passed(0.95)


def test_sample_deterministic(tmp_path):
    for d in ("a", "b"):
        assert main(["sample", "--scenario", "dts_exponential", "--seed", "9", "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a" / "samples.txt").read_bytes() == (tmp_path / "b" / "samples.txt").read_bytes()


def test_seed_required_for_stochastic(tmp_path, capsys):
    sc = write(tmp_path, dist(family="ds", alpha=0.5, eta=0.5) | {"count": 5})
    assert main(["sample", "--scenario", sc, "--out", str(tmp_path)]) == 2
    assert "needs --seed" in capsys.readouterr().err


@pytest.mark.parametrize("doc, needle", [
    ({"version": 1, "distribution": {"family": "ds", "alpha": 0.5, "eta": 0.5}, "colour": 1}, "colour"),
    ({"version": 2}, "version"),
    ({"version": 1, "distribution": {"family": "ps", "alpha": 0.5}}, "eta"),
    ({"version": 1, "distribution": {"family": "ps", "alpha": 1.5, "eta": 1.0}}, "alpha"),
    ({"version": 1, "experiment": {"type": "array", "regime": "finite"}}, "regime"),
])
def test_configuration_errors(tmp_path, capsys, doc, needle):
    assert main(["transform", "--scenario", write(tmp_path, doc), "--out", str(tmp_path)]) == 2
    assert needle in capsys.readouterr().err


def test_malformed_regime_exit_2(tmp_path, capsys):
    doc = load_scenario("thm42_finite_c")
    doc["experiment"]["regime"] = "finite"
    assert main(["limit", "--scenario", write(tmp_path, doc), "--seed", "1", "--out", str(tmp_path)]) == 2
    assert "regime" in capsys.readouterr().err


def test_unknown_scenario_and_bad_seed(tmp_path):
    assert main(["transform", "--scenario", "no_such_thing", "--out", str(tmp_path)]) == 2
    assert main(["sample", "--scenario", "ds_half", "--seed", str(2**64), "--out", str(tmp_path)]) == 2
    assert main(["nonsense", "--scenario", "ds_half", "--out", str(tmp_path)]) == 2


def test_limit_small_scenario_deterministic_over_workers(tmp_path):
    doc = load_scenario("thm47_finite_c")
    doc["experiment"].update(n=1000, m=4000)
    sc = write(tmp_path, doc)
    out1, out4 = tmp_path / "w1", tmp_path / "w4"
    c1 = main(["limit", "--scenario", sc, "--seed", "5", "--out", str(out1), "--workers", "1"])
    c4 = main(["limit", "--scenario", sc, "--seed", "5", "--out", str(out4), "--workers", "4"])
    assert c1 == c4
    for name in ("limit.json", "limit.csv"):
        assert (out1 / name).read_bytes() == (out4 / name).read_bytes()
    rep = json.loads((out1 / "limit.json").read_text())
    assert rep["kind"] == "pgf" and rep["limit"]["family"] == "dts"


def test_conditions_command(tmp_path):
    assert main(["conditions", "--scenario", "conditions_pareto", "--out", str(tmp_path)]) == 0
    for r in rows(tmp_path / "conditions_tail.csv"):
        assert abs(float(r["error"])) < 1e-12
    rep = json.loads((tmp_path / "conditions.json").read_text())
    assert rep["regime"]["limit"]["family"] == "ps"


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "tempest", "transform", "--scenario", "ds_half",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0 and (tmp_path / "transform.csv").exists()
