import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from confclust.cli import main
from confclust.conformal import PredictionSet, ResidualFn
from confclust.dataset import gen_blobs, write_csv
from confclust.geometry import Clustering, VolumeEstimate
from confclust.io import dump_json, load_artifact
from confclust.kmeans import SphereModel
from confclust.plot import render_svg
from confclust.selection import VolumeCurve

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture
def two_csv(tmp_path):
    path = tmp_path / "two.csv"
    write_csv(gen_blobs(2, 200, [[0, 0], [8, 0]], 1.0, seed=1), path)
    return path


@pytest.fixture
def four_csv(tmp_path):
    path = tmp_path / "four.csv"
    centers = [[0, 0], [8, 0], [0, 8], [8, 8]]
    write_csv(gen_blobs(4, 150, centers, 1.0, noise_n=40, noise_box=([-3, -3], [11, 11]), seed=2), path)
    return path


def run(*argv):
    return main([str(a) for a in argv])


def test_fit_writes_artifacts_deterministically(two_csv, tmp_path):
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert run("fit", "--input", two_csv, "--k", 6, "--out-dir", out, "--mc-samples", 5000) == 0
    for name in ("model.json", "prediction_set.json", "clustering.json", "volume.json", "data.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
    assert json.loads((outs[0] / "clustering.json").read_text())["r"] == 2


def test_fit_artifacts_reload(two_csv, tmp_path):
    run("fit", "--input", two_csv, "--k", 3, "--out-dir", tmp_path, "--mc-samples", 2000, "--rule", "geometric")
    assert isinstance(load_artifact(tmp_path / "model.json"), SphereModel)
    assert isinstance(load_artifact(tmp_path / "prediction_set.json"), PredictionSet)
    assert isinstance(load_artifact(tmp_path / "clustering.json"), Clustering)
    assert isinstance(load_artifact(tmp_path / "volume.json"), VolumeEstimate)
    meta = json.loads((tmp_path / "model.json").read_text())
    assert (meta["method"], meta["k"], meta["alpha"]) == ("kspheres", 3, 0.1)


@pytest.mark.parametrize("method", ["kspheres-weighted", "gmm", "maxmix-klloyd", "maxmix-em", "levelset"])
def test_fit_every_method(two_csv, tmp_path, method):
    assert run("fit", "--input", two_csv, "--method", method, "--k", 2, "--knn", 10,
               "--out-dir", tmp_path, "--mc-samples", 2000) == 0
    pset = load_artifact(tmp_path / "prediction_set.json")
    assert pset.nonempty.any()


def test_invalid_alpha_is_a_usage_error(two_csv, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        run("fit", "--input", two_csv, "--k", 2, "--alpha", 1.5, "--out-dir", tmp_path)
    assert exc.value.code == 2
    assert "alpha" in capsys.readouterr().err


def test_missing_input_is_a_pipeline_error(tmp_path, capsys):
    assert run("fit", "--input", tmp_path / "nope.csv", "--k", 2, "--out-dir", tmp_path) == 1
    assert "error" in capsys.readouterr().err


def test_k_larger_than_data(tmp_path, capsys):
    path = tmp_path / "tiny.csv"
    path.write_text("0,0\n1,1\n2,2\n")
    assert run("fit", "--input", path, "--k", 5, "--out-dir", tmp_path) == 1
    assert "k=5" in capsys.readouterr().err


def test_seed_env_sets_default_only(two_csv, tmp_path, monkeypatch):
    monkeypatch.setenv("CONFCLUST_SEED", "7")
    run("fit", "--input", two_csv, "--k", 2, "--out-dir", tmp_path / "env", "--mc-samples", 1000)
    run("fit", "--input", two_csv, "--k", 2, "--out-dir", tmp_path / "flag", "--mc-samples", 1000, "--seed", 3)
    assert json.loads((tmp_path / "env" / "model.json").read_text())["seed"] == 7
    assert json.loads((tmp_path / "flag" / "model.json").read_text())["seed"] == 3


def test_select_table_and_replay(four_csv, tmp_path, capsys):
    args = ["select", "--input", four_csv, "--k-min", 1, "--k-max", 7, "--mc-samples", 20000]
    assert run(*args, "--out-dir", tmp_path / "a") == 0
    table = capsys.readouterr().out
    assert "S_k" in table and "minimum-volume k: 4" in table
    run(*args, "--out-dir", tmp_path / "b")
    assert (tmp_path / "a" / "decision.json").read_bytes() == (tmp_path / "b" / "decision.json").read_bytes()
    assert isinstance(load_artifact(tmp_path / "a" / "curve.json"), VolumeCurve)


def test_select_single_k(four_csv, tmp_path):
    run("select", "--input", four_csv, "--k-min", 3, "--k-max", 3, "--mc-samples", 1000, "--out-dir", tmp_path)
    assert json.loads((tmp_path / "decision.json").read_text())["k_min_volume"] == 3


def test_select_with_bootstrap_and_correction(four_csv, tmp_path, capsys):
    assert run("select", "--input", four_csv, "--k-min", 1, "--k-max", 3, "--mc-samples", 1000,
               "--bootstrap", 100, "--corrected", "--out-dir", tmp_path) == 0
    doc = json.loads((tmp_path / "decision.json").read_text())
    assert doc["alpha"] == pytest.approx(0.1 / 3)
    assert doc["test"]["k_hat"] in (1, 2, 3)
    assert "bootstrap test k" in capsys.readouterr().out


@pytest.mark.parametrize("extra", [["--k-min", 5, "--k-max", 2], ["--bootstrap", 20]])
def test_select_usage_errors(four_csv, tmp_path, extra):
    with pytest.raises(SystemExit) as exc:
        run("select", "--input", four_csv, "--out-dir", tmp_path, *extra)
    assert exc.value.code == 2


def test_plot_triptych(four_csv, tmp_path):
    run("select", "--input", four_csv, "--k-min", 1, "--k-max", 6, "--mc-samples", 5000, "--out-dir", tmp_path)
    svg = tmp_path / "fig.svg"
    assert run("plot", "--artifacts", tmp_path, "--out", svg) == 0
    root = ET.parse(svg).getroot()
    assert root.findall(f".//{SVG}polyline")
    assert len(root.findall(f".//{SVG}circle[@class='component']")) == 4


def test_plot_circle_radius_matches(tmp_path):
    pts = np.random.default_rng(0).normal(size=(20, 2))
    res = ResidualFn("plain_distance", {"centers": np.zeros((1, 2))})
    pset = PredictionSet(np.zeros((1, 2)), np.array([1.2345678901234567]), 1.2345678901234567, 0.1, res)
    write_csv(pts, tmp_path / "data.csv")
    dump_json(pset.to_dict(), tmp_path / "prediction_set.json")
    run("plot", "--artifacts", tmp_path, "--out", tmp_path / "p.svg")
    circles = ET.parse(tmp_path / "p.svg").getroot().findall(f".//{SVG}circle[@class='component']")
    saved = json.loads((tmp_path / "prediction_set.json").read_text())["components"][0]["radius"]
    assert len(circles) == 1 and float(circles[0].get("r")) == saved


def test_plot_empty_set_warns(tmp_path, capsys):
    pts = np.random.default_rng(0).normal(size=(10, 2))
    res = ResidualFn("plain_distance", {"centers": np.zeros((2, 2))})
    pset = PredictionSet(np.zeros((2, 2)), np.zeros(2), 0.0, 0.1, res)
    write_csv(pts, tmp_path / "data.csv")
    dump_json(pset.to_dict(), tmp_path / "prediction_set.json")
    assert run("plot", "--artifacts", tmp_path, "--out", tmp_path / "p.svg") == 0
    assert "empty" in capsys.readouterr().err
    root = ET.parse(tmp_path / "p.svg").getroot()
    assert not root.findall(f".//{SVG}circle[@class='component']")
    assert len(root.findall(f".//{SVG}circle[@class='point']")) == 20


def test_plot_rejects_3d(tmp_path, capsys):
    write_csv(np.zeros((4, 3)), tmp_path / "data.csv")
    assert run("plot", "--artifacts", tmp_path, "--out", tmp_path / "p.svg") == 1
    assert "2-D" in capsys.readouterr().err
    with pytest.raises(ValueError):
        render_svg(np.zeros((4, 3)))


def test_plot_ellipses(two_csv, tmp_path):
    run("fit", "--input", two_csv, "--method", "gmm", "--k", 2, "--out-dir", tmp_path, "--mc-samples", 1000)
    run("plot", "--artifacts", tmp_path, "--out", tmp_path / "p.svg")
    assert len(ET.parse(tmp_path / "p.svg").getroot().findall(f".//{SVG}ellipse")) == 2


def test_unknown_artifact(tmp_path):
    dump_json({}, tmp_path / "other.json")
    with pytest.raises(ValueError):
        load_artifact(tmp_path / "other.json")
