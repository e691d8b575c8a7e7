import json

import numpy as np
import pytest

from almostlip.cli import EXIT_AUDIT, EXIT_OK, EXIT_USAGE, main, parse_seeds
from almostlip.io import InputError, dumps, load_input
from almostlip.metric_core import FiniteMetricSpace, PointSet, random_metric_space


@pytest.fixture
def files(tmp_path):
    paths = {}
    paths["interval"] = tmp_path / "interval.csv"
    np.savetxt(paths["interval"], np.linspace(0, 1, 512)[:, None], delimiter=",")
    paths["two"] = tmp_path / "two.csv"
    np.savetxt(paths["two"], np.array([[0.0, 0.0], [1.0, 0.0]]), delimiter=",")
    paths["cloud"] = tmp_path / "cloud.csv"
    np.savetxt(paths["cloud"], np.random.default_rng(0).standard_normal((32, 4)), delimiter=",")
    paths["metric"] = tmp_path / "metric.csv"
    np.savetxt(paths["metric"], random_metric_space(64, 1).dist, delimiter=",")
    paths["json"] = tmp_path / "pts.json"
    paths["json"].write_text(json.dumps({"points": [[0, 0], [1, 1], [2, 0]], "norm": "sup"}))
    return paths


def _report(path):
    return json.loads(path.read_text())


def test_parse_seeds():
    assert parse_seeds("3") == (0, 1, 2)
    assert parse_seeds("2:5") == (2, 3, 4)
    assert parse_seeds("7,1") == (7, 1)
    assert parse_seeds(2) == (0, 1)


def test_load_input_detects_kind(files):
    assert isinstance(load_input(files["metric"]), FiniteMetricSpace)
    assert isinstance(load_input(files["cloud"]), PointSet)
    P = load_input(files["json"])
    assert isinstance(P, PointSet) and P.norm_kind == "sup"
    assert isinstance(load_input(files["metric"], kind="points"), PointSet)


def test_load_input_errors(tmp_path):
    with pytest.raises(InputError):
        load_input(tmp_path / "missing.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,x\n")
    with pytest.raises(InputError):
        load_input(bad)
    js = tmp_path / "bad.json"
    js.write_text(json.dumps({"weights": [1]}))
    with pytest.raises(InputError):
        load_input(js)


def test_dumps_is_canonical():
    assert dumps({"b": float("inf"), "a": np.float64(1.5)}) == dumps({"a": 1.5, "b": None})


def test_dim_estimate_interval(files, tmp_path):
    out = tmp_path / "d.json"
    assert main(["dim-estimate", "--input", str(files["interval"]), "--out", str(out)]) == EXIT_OK
    rep = _report(out)
    assert 0.8 <= rep["report"]["fit"]["s_hat"] <= 1.2
    meta = json.loads((tmp_path / "d.json.meta.json").read_text())
    assert "timestamp" in meta and "timestamp" not in rep


def test_embed_net_two_points(files, tmp_path):
    out = tmp_path / "e.json"
    assert main(["embed-net", "--input", str(files["two"]), "--out", str(out), "--format", "csv"]) == EXIT_OK
    rep = _report(out)["report"]
    assert rep["base_image_norm"] == 0.0
    assert rep["distortion"]["L_fit"] is not None
    assert (tmp_path / "e.csv").exists()


def test_metric_pipeline_and_determinism(files, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["metric-pipeline", "--input", str(files["metric"]), "--target-dim", "8", "--seeds", "20"]
    assert main(args + ["--out", str(a)]) == EXIT_OK
    assert main(args + ["--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert _report(a)["report"]["injective_fraction"] >= 0.9


def test_embed_linear_and_deviation(files, tmp_path):
    out = tmp_path / "l.json"
    assert main(["embed-linear", "--input", str(files["cloud"]), "--seeds", "4", "--out", str(out)]) == EXIT_OK
    assert _report(out)["report"]["operator_bound_holds"]
    out = tmp_path / "v.json"
    rc = main(["deviation", "--input", str(files["cloud"]), "--grid-min", "0", "--grid-max", "6", "--out", str(out)])
    assert rc == EXIT_OK
    rep = _report(out)["report"]
    assert rep["graph_distance_ok"]
    out = tmp_path / "s.json"
    assert main(["embed-linear", "--input", str(files["json"]), "--seeds", "2", "--out", str(out)]) == EXIT_OK
    assert _report(out)["report"]["quarter_check"]["passed"]


def test_gallery_command(tmp_path):
    out = tmp_path / "g.json"
    pts = tmp_path / "g.csv"
    rc = main(["gallery", "--kind", "xstar", "--depth", "4", "--out", str(out), "--points-out", str(pts)])
    assert rc == EXIT_OK
    assert _report(out)["report"]["claim"]["status"] == "passed"
    assert np.loadtxt(pts, delimiter=",", skiprows=1).shape == (15, 15)


def test_config_file_and_flag_priority(files, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"input": str(files["metric"]), "target_dim": 3, "seeds": "2"}))
    out = tmp_path / "c.json"
    assert main(["metric-pipeline", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    assert _report(out)["report"]["N"] == 3
    assert main(["metric-pipeline", "--config", str(cfg), "--target-dim", "5", "--out", str(out)]) == EXIT_OK
    assert _report(out)["report"]["N"] == 5


def test_usage_errors(files, tmp_path):
    assert main(["dim-estimate"]) == EXIT_USAGE
    assert main(["embed-net", "--input", str(files["two"]), "--delta", "0.4"]) == EXIT_USAGE
    assert main(["embed-linear", "--input", str(files["metric"])]) == EXIT_USAGE
    assert main(["dim-estimate", "--input", str(tmp_path / "nope.csv")]) == EXIT_USAGE
    assert main(["metric-pipeline", "--input", str(files["metric"]), "--seeds", "x"]) == EXIT_USAGE
    with pytest.raises(SystemExit):
        main(["no-such-command"])


def test_audit_failure_exit(tmp_path):
    # eight terms leave no room for the packing sizes 8, 16, 24, so the claim fails
    rc = main(["gallery", "--kind", "rho_sequence", "--n", "8", "--out", str(tmp_path / "r.json")])
    assert rc == EXIT_AUDIT
