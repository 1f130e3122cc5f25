import hashlib
from pathlib import Path

import numpy as np
import pytest
import yaml

from geocurve import cli, config, io
from geocurve.curve import ManifoldCurve, TimeGrid
from geocurve.errors import ConfigError, NotOnSphereError
from geocurve.simulation import cap_sample


def tree_hash(root):
    h = hashlib.sha256()
    for p in sorted(Path(root).rglob("*")):
        if p.is_file():
            h.update(str(p.relative_to(root)).encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def test_curve_csv_roundtrip_is_exact(tmp_path):
    x = cap_sample(1, n_nodes=25, seed=3)[0]
    io.write_curve_csv(tmp_path / "x.csv", x)
    y = io.read_curve_csv(tmp_path / "x.csv")
    np.testing.assert_array_equal(y.grid.nodes, x.grid.nodes)
    np.testing.assert_allclose(y.points, x.points, atol=1e-15)


def test_curve_csv_rejects_bad_rows(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,c1,c2,c3\n0,1,0,0\n1,0.9,0,0\n")
    with pytest.raises(NotOnSphereError):
        io.read_curve_csv(p)
    p.write_text("time,x\n0,1\n")
    with pytest.raises(ValueError):
        io.read_curve_csv(p)


def test_curve_csv_renormalizes_small_drift(tmp_path):
    p = tmp_path / "drift.csv"
    p.write_text("t,c1,c2,c3\n0,1.0000001,0,0\n1,0.6,0.8,0\n")
    x = io.read_curve_csv(p)
    assert np.linalg.norm(x.points[0]) == pytest.approx(1.0, abs=1e-15)


def test_sample_roundtrip(tmp_path):
    X = cap_sample(3, n_nodes=10, seed=0)
    io.save_sample(tmp_path, X, X, {"generator": "cap"})
    Y2, X2, man = io.load_sample(tmp_path)
    assert man["n"] == 3 and len(Y2) == 3
    with pytest.raises(FileNotFoundError):
        io.load_sample(tmp_path / "missing")


def test_json_is_sorted_and_numpy_aware(tmp_path):
    io.write_json(tmp_path / "a.json", {"b": np.float64(1.5), "a": np.arange(2), "c": (1, 2)})
    text = (tmp_path / "a.json").read_text()
    assert text.index('"a"') < text.index('"b"')
    assert io.read_json(tmp_path / "a.json") == {"a": [0, 1], "b": 1.5, "c": [1, 2]}


def test_config_defaults_validate():
    cfg = config.load_config()
    assert cfg["model"]["m"] == 2
    config.validate(cfg)


def test_config_overrides_and_errors(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text(yaml.safe_dump({"simulation": {"n": 12}}))
    cfg = config.load_config(p, ["model.m=3", "simulation.arima.ar=[0.5, 0.2]"], seed=7, out="o")
    assert cfg["simulation"]["n"] == 12 and cfg["model"]["m"] == 3
    assert cfg["simulation"]["arima"]["ar"] == [0.5, 0.2] and cfg["simulation"]["seed"] == 7
    with pytest.raises(ConfigError):
        config.load_config(None, ["model.bogus=1"])
    with pytest.raises(ConfigError):
        config.load_config(None, ["model.m=0"])
    with pytest.raises(ConfigError):
        config.load_config(None, ["no-equals-sign"])
    p.write_text("- a list\n")
    with pytest.raises(ConfigError):
        config.load_config(p)


def _run(args):
    return cli.main([str(a) for a in args])


@pytest.fixture(scope="module")
def cap_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("cap")
    common = ["--set", "simulation.generator=cap", "--set", "simulation.n=30",
              "--set", "simulation.n_nodes=60", "--set", "model.resolution=30"]
    assert _run(["simulate", *common, "--seed", 3, "--out", root / "sample"]) == 0
    assert _run(["fit-predict", *common, "--sample", root / "sample", "--out", root / "fit"]) == 0
    return root, common


def test_simulate_writes_sample(cap_run):
    root, _ = cap_run
    assert len(list((root / "sample" / "curves").glob("*.csv"))) == 60
    assert (root / "sample" / "sphere.svg").read_text().startswith("<svg")


def test_fit_predict_outputs(cap_run):
    root, _ = cap_run
    m = io.read_json(root / "fit" / "metrics.json")
    assert m["weight_identity_error"] < 1e-8
    assert m["sup_error"] < 0.05
    assert (root / "fit" / "model" / "model.json").exists()
    assert io.read_curve_csv(root / "fit" / "prediction.csv").dim == 3


def test_holdout_and_auto_lag(cap_run, tmp_path):
    root, common = cap_run
    rc = _run(["fit-predict", *common, "--set", "query.holdout=true", "--set", "model.m=auto",
               "--sample", root / "sample", "--out", tmp_path])
    assert rc == 0
    m = io.read_json(tmp_path / "metrics.json")
    assert m["holdout"] and m["n"] == 29 and m["m"] >= 1


def test_select_outputs(cap_run, tmp_path):
    root, common = cap_run
    rc = _run(["select", *common, "--set", "selection.s_star=[25, 29]",
               "--sample", root / "sample", "--out", tmp_path])
    assert rc == 0
    rows = (tmp_path / "selection_table.csv").read_text().splitlines()
    assert rows[0] == "s_star,scenario_1,scenario_2" and len(rows) == 3
    assert len(io.read_json(tmp_path / "selection.json")["results"]) == 4


def test_report_and_exit_codes(cap_run, tmp_path):
    root, _ = cap_run
    assert _run(["report", root / "fit", "--out", tmp_path / "rep"]) == 0
    text = (tmp_path / "rep" / "report.md").read_text()
    assert "weight identity: PASS" in text
    (tmp_path / "empty").mkdir()
    assert _run(["report", tmp_path / "empty", "--out", tmp_path / "rep2"]) == 1


def test_report_flags_non_monotone_trend(tmp_path):
    for name, n, err in (("a", 50, 0.1), ("b", 100, 0.2)):
        io.write_json(tmp_path / name / "metrics.json", {
            "n": n, "m": 2, "sup_error": err, "integrated_sq_error": err,
            "weight_identity_error": 0.0, "converged": True})
    assert _run(["report", tmp_path, "--out", tmp_path / "rep"]) == 3


def test_usage_and_numerical_exit_codes(tmp_path):
    assert _run(["bogus"]) == 1
    assert _run(["simulate", "--set", "model.nope=1", "--out", tmp_path]) == 1
    assert _run(["fit-predict", "--sample", tmp_path / "nowhere", "--out", tmp_path]) == 1
    g = TimeGrid.uniform(10)
    same = ManifoldCurve(g, np.tile([0.0, 0, 1], (10, 1)))
    io.save_sample(tmp_path / "flat", [same] * 5, [same] * 5, {"generator": "cap"})
    assert _run(["fit-predict", "--sample", tmp_path / "flat", "--out", tmp_path / "o"]) == 2


def test_pipeline_is_deterministic(tmp_path):
    common = ["--set", "simulation.n=8", "--set", "simulation.n_nodes=120",
              "--set", "model.resolution=40", "--set", "model.m=1", "--seed", 11]
    for run in ("r1", "r2"):
        out = tmp_path / run
        assert _run(["simulate", *common, "--out", out / "sample"]) == 0
        assert _run(["fit-predict", *common, "--sample", out / "sample", "--out", out / "fit"]) == 0
    assert tree_hash(tmp_path / "r1") == tree_hash(tmp_path / "r2")
