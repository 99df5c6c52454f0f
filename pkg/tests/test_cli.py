import json
import xml.etree.ElementTree as ET

import numpy as np
import pandas as pd
import pytest
from landscape_probe import __version__
from landscape_probe.cli import EXIT_DIVERGED, EXIT_OK, EXIT_USAGE, main
from landscape_probe.input_output.from_to_trajectory import load_trajectory

SVG = "{http://www.w3.org/2000/svg}"

SMALL = """
[model]
layers = affine(3,5) relu affine(5,2)
init_scale = 0.2

[data]
source = two-gaussians
n = 60
dim = 3
separation = 4.0

[train]
learning_rate = 0.1
momentum = 0.5
batch_size = 8
max_epochs = 4
patience = none
"""


def _train(directory, text=SMALL):
    config = directory / "exp.cfg"
    config.write_text(text + "[output]\ndirectory = run\n")
    code = main(["--threads", "1", "train", str(config)])
    return code, directory / "run"


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    code, out = _train(tmp_path_factory.mktemp("cli"))
    assert code == EXIT_OK
    return out


def test_train(trained):
    for name in ("trajectory.lptraj", "learning_curve.csv", "manifest.json"):
        assert (trained / name).is_file()
    record = load_trajectory(trained / "trajectory.lptraj")
    assert len(record) == 5
    assert record.metadata["data.source"] == "two-gaussians"
    frame = pd.read_csv(trained / "learning_curve.csv")
    assert frame.columns.tolist() == ["epoch", "J_train", "J_valid", "err_train", "err_valid"]
    manifest = json.loads((trained / "manifest.json").read_text())
    assert manifest["spec_digest"] == record.spec_digest
    assert manifest["train"]["max_epochs"] == 4
    assert "numpy" in manifest["versions"]


def test_rerun_identical(trained, tmp_path):
    code, out = _train(tmp_path)
    assert code == EXIT_OK
    for name in ("trajectory.lptraj", "learning_curve.csv", "manifest.json"):
        assert (out / name).read_bytes() == (trained / name).read_bytes()


def test_thread_count_irrelevant(trained, tmp_path):
    config = tmp_path / "exp.cfg"
    config.write_text(SMALL)
    assert main(["--threads", "3", "train", str(config), "--output", str(tmp_path / "t3")]) == 0
    assert (tmp_path / "t3" / "trajectory.lptraj").read_bytes() == (
        trained / "trajectory.lptraj"
    ).read_bytes()


def test_missing_data_file(tmp_path, capsys):
    text = SMALL.replace("source = two-gaussians", "source = idx\nimages = gone\nlabels = gone2")
    code, out = _train(tmp_path, text)
    assert code == EXIT_USAGE
    assert str(tmp_path / "gone") in capsys.readouterr().err
    assert not out.exists()


def test_missing_config(tmp_path, capsys):
    assert main(["train", str(tmp_path / "nope.cfg")]) == EXIT_USAGE
    assert "nope.cfg" in capsys.readouterr().err


def test_divergence(tmp_path, capsys):
    text = """
    [model]
    layers = affine(1,1,nobias) affine(1,1,nobias)
    loss = mean-squared-error
    init_scale = 0.5

    [data]
    source = scalar

    [train]
    learning_rate = 10
    batch_size = 1
    max_epochs = 200
    patience = none
    """
    code, _ = _train(tmp_path, "\n".join(line.strip() for line in text.split("\n")))
    assert code == EXIT_DIVERGED
    assert "diverged" in capsys.readouterr().err


def test_interp(trained, tmp_path):
    out = tmp_path / "interp"
    args = ["interp", str(trained / "trajectory.lptraj"), "--output", str(out)]
    assert main(args) == EXIT_OK
    frame = pd.read_csv(out / "curve.csv")
    assert len(frame) == 50
    assert frame.columns.tolist() == ["alpha", "J_train", "J_valid", "err_rate"]
    assert frame["alpha"].iloc[0] == 0.0 and frame["alpha"].iloc[-1] == 1.0
    root = ET.parse(out / "curve.svg").getroot()
    assert len(root.findall(f".//{SVG}polyline[@class='series']")) == 2


def test_interp_log_y(trained, tmp_path):
    out = tmp_path / "interp"
    args = ["interp", str(trained / "trajectory.lptraj"), "--log-y", "--grid", "0:1:11"]
    assert main(args + ["--output", str(out)]) == EXIT_OK
    assert len(pd.read_csv(out / "curve.csv")) == 11
    root = ET.parse(out / "curve.svg").getroot()
    ticks = [t.text for t in root.findall(f".//{SVG}text[@class='ytick']")]
    assert ticks and all(t.startswith("1e") for t in ticks)


def test_interp_random_point(trained, tmp_path):
    out = tmp_path / "random"
    args = ["interp", str(trained / "trajectory.lptraj"), "--mode", "random-point"]
    assert main(args + ["--seed", "2", "--output", str(out)]) == EXIT_OK
    assert len(pd.read_csv(out / "curve.csv")) == 50


def test_two_solutions(trained, tmp_path, capsys):
    path = str(trained / "trajectory.lptraj")
    out = tmp_path / "two"
    args = ["interp", path, "--mode", "two-solutions", "--output", str(out)]
    assert main(args) == EXIT_USAGE
    assert "exactly two" in capsys.readouterr().err
    assert main(args[:2] + [path] + args[2:]) == EXIT_OK
    frame = pd.read_csv(out / "curve.csv")
    # both ends are the same solution
    assert frame["J_train"].nunique() == 1
    assert frame["J_valid"].nunique() == 1
    assert ET.parse(out / "curve.svg").getroot().tag == f"{SVG}svg"


def test_several_trajectories(trained, tmp_path):
    path = str(trained / "trajectory.lptraj")
    out = tmp_path / "many"
    assert main(["interp", path, path, "--output", str(out)]) == EXIT_OK
    assert (out / "curve_0.csv").read_bytes() == (out / "curve_1.csv").read_bytes()
    assert not (out / "curve.csv").exists()


def test_bad_trajectory(tmp_path, capsys):
    empty = tmp_path / "empty.lptraj"
    empty.write_bytes(b"")
    assert main(["project", str(empty), "--output", str(tmp_path / "p")]) == EXIT_USAGE
    assert "empty" in capsys.readouterr().err
    missing = str(tmp_path / "missing.lptraj")
    assert main(["interp", missing, "--output", str(tmp_path / "i")]) == EXIT_USAGE


def test_bad_grid(trained, capsys):
    assert main(["interp", str(trained / "trajectory.lptraj"), "--grid", "huge"]) == EXIT_USAGE
    assert "huge" in capsys.readouterr().err


def test_project(trained, tmp_path):
    out = tmp_path / "project"
    assert main(["project", str(trained / "trajectory.lptraj"), "--output", str(out)]) == EXIT_OK
    frame = pd.read_csv(out / "trace.csv")
    assert len(frame) == 5
    assert frame["beta"].iloc[0] == 0.0
    assert (out / "trace.svg").is_file()


@pytest.mark.parametrize("kind", ["trajectory", "random-plane", "alpha-random"])
def test_surface(trained, tmp_path, kind):
    out = tmp_path / kind
    args = ["surface", str(trained / "trajectory.lptraj"), "--kind", kind, "--output", str(out)]
    args += ["--alpha-points", "6", "--beta-points", "4", "--resolution", "5"]
    assert main(args) == EXIT_OK
    grid = json.loads((out / "surface.json").read_text())
    assert grid["kind"] == kind
    values = np.array(grid["values"], dtype=float)
    assert values.shape == (len(grid["x"]), len(grid["y"]))
    assert len(pd.read_csv(out / "surface.csv")) == values.size
    assert ET.parse(out / "surface.svg").getroot().tag == f"{SVG}svg"


def test_surface_config(trained, tmp_path):
    config = tmp_path / "exp.cfg"
    config.write_text(SMALL + "[surface]\nkind = random-plane\nresolution = 3\nextent = 1.0\n")
    out = tmp_path / "surface"
    args = ["surface", str(trained / "trajectory.lptraj"), "--config", str(config)]
    assert main(args + ["--output", str(out)]) == EXIT_OK
    grid = json.loads((out / "surface.json").read_text())
    assert grid["kind"] == "random-plane"
    assert grid["x"] == [-1.0, 0.0, 1.0]


def test_surface_variation_report(trained, tmp_path):
    out = tmp_path / "plane"
    args = ["surface", str(trained / "trajectory.lptraj"), "--kind", "random-plane"]
    with pytest.warns(UserWarning, match="odd"):
        code = main(args + ["--resolution", "4", "--output", str(out)])
    assert code == EXIT_OK
    grid = json.loads((out / "surface.json").read_text())
    assert len(grid["x"]) == 5
    report = json.loads((out / "variation.json").read_text())
    assert report["plane"] == grid["coefficient_of_variation"]
    assert report["ratio"] == report["plane"] / report["trajectory"]
    assert 0 < report["ratio"] < 1


def test_control_walk(tmp_path):
    out = tmp_path / "walk"
    args = ["control", "walk", "--dims", "1", "20", "--steps", "60", "--solution-step", "50"]
    assert main(args + ["--output", str(out)]) == EXIT_OK
    one = pd.read_csv(out / "walk_d1.csv")
    assert len(one) == 61
    assert np.all(one["beta"] == 0.0)
    assert len(pd.read_csv(out / "walk_d20.csv")) == 61
    root = ET.parse(out / "walk.svg").getroot()
    assert len(root.findall(f"{SVG}svg")) == 2


def test_control_walk_invalid(tmp_path, capsys):
    args = ["control", "walk", "--dims", "5", "--steps", "10", "--output", str(tmp_path)]
    assert main(args) == EXIT_USAGE
    assert "solution" in capsys.readouterr().err


def test_control_quadratic(tmp_path):
    out = tmp_path / "quadratic"
    args = ["control", "quadratic", "--dim", "50", "--steps", "30", "--spectrum", "isotropic"]
    args += ["--learning-rates", "0.1", "3.0", "--output", str(out)]
    with pytest.warns(UserWarning):
        assert main(args) == EXIT_OK
    summary = pd.read_csv(out / "quadratic_summary.csv")
    assert summary["learning_rate"].tolist() == [0.1, 3.0]
    assert summary["diverged"].tolist() == [False, True]
    assert (out / "quadratic_0.csv").is_file() and (out / "quadratic_1.csv").is_file()


def test_control_heatmap(tmp_path):
    out = tmp_path / "heatmap"
    args = ["control", "heatmap", "--resolution", "11", "--steps", "20", "--output", str(out)]
    assert main(args) == EXIT_OK
    grid = json.loads((out / "heatmap.json").read_text())
    assert len(grid["overlay"]) == 21
    assert grid["values"][5][5] == 1.0
    root = ET.parse(out / "heatmap.svg").getroot()
    assert len(root.findall(f".//{SVG}circle[@class='marker']")) == 21


def test_control_heatmap_even_resolution(tmp_path):
    out = tmp_path / "heatmap"
    args = ["control", "heatmap", "--resolution", "10", "--steps", "5", "--output", str(out)]
    with pytest.warns(UserWarning, match="odd"):
        assert main(args) == EXIT_OK
    grid = json.loads((out / "heatmap.json").read_text())
    assert len(grid["x"]) == 11
    assert grid["x"][5] == 0.0


def test_control_taylor(tmp_path):
    out = tmp_path / "taylor"
    args = ["control", "taylor", "--t", "0.1", "0.05", "--n-steps", "200", "--output", str(out)]
    assert main(args) == EXIT_OK
    frame = pd.read_csv(out / "taylor.csv")
    assert frame["t"].tolist() == [0.1, 0.05]
    assert np.all(frame["discrepancy"] < frame["first_order_discrepancy"])


def test_version(capsys):
    assert main(["--version"]) == EXIT_OK
    assert __version__ in capsys.readouterr().out


def test_usage_errors(capsys):
    assert main([]) == EXIT_USAGE
    assert main(["control", "nothing"]) == EXIT_USAGE
    assert main(["--threads", "x", "control", "walk"]) == EXIT_USAGE
