import json
import subprocess
import sys

import numpy as np
import pytest

from rosfit import cli
from rosfit.landscape import load_burn_grid, write_burn_grid

from conftest import DATA


def instance_args(name, ignition_flag=True):
    d = DATA / name
    args = ["--fuels", str(d / "fuels.asc"), "--fuel-table", str(d / "fuels.csv"),
            "--weather", str(d / "weather.csv")]
    args += ["--ignition-file", str(d / "ignition.csv")] if ignition_flag else []
    return args


def test_simulate_writes_grids_and_manifest(tmp_path):
    out = tmp_path / "sim"
    assert cli.main(["simulate", *instance_args("circle_5x5"), "--out", str(out)]) == 0
    grids = sorted((out / "scars").glob("*.asc"))
    assert len(grids) == 7
    m = json.loads((out / "manifest.json").read_text())
    assert m["command"] == "simulate" and m["resolved_args"]["horizon"] == 420.0
    assert set(m["inputs"]) == {"fuels", "fuel_table", "weather", "ignition_file"}
    assert all(len(v["sha256"]) == 64 for v in m["inputs"].values())
    expected = sorted((DATA / "circle_5x5" / "scars").glob("*.asc"))
    assert [g.read_text() for g in grids] == [g.read_text() for g in expected]


def test_manifest_reproduces_run(tmp_path):
    out = tmp_path / "a"
    argv = ["simulate", *instance_args("homogeneous_20x20"), "--factors", "1.4,1.1,1.8,1.15",
            "--out", str(out)]
    assert cli.main(argv) == 0
    m = json.loads((out / "manifest.json").read_text())
    replay = [a if a != str(out) else str(tmp_path / "b") for a in m["argv"]]
    assert cli.main(replay) == 0
    for g in (out / "scars").glob("*.asc"):
        assert g.read_bytes() == (tmp_path / "b" / "scars" / g.name).read_bytes()
        assert g.read_bytes() == (DATA / "homogeneous_20x20" / "scars" / g.name).read_bytes()


def test_simulate_render(tmp_path):
    out = tmp_path / "r"
    assert cli.main(["simulate", *instance_args("barrier_island"), "--out", str(out),
                     "--render", "--horizon", "120"]) == 0
    pgm = (out / "scars" / "scar_00060.pgm").read_bytes()
    assert pgm.startswith(b"P5\n24 24\n255\n")
    assert len(pgm) == len(b"P5\n24 24\n255\n") + 24 * 24
    assert len(list((out / "scars").glob("*.asc"))) == 2


def test_simulate_with_factors_json(tmp_path):
    hidden = json.loads((DATA / "striped_8fuel" / "hidden.json").read_text())["hidden_x"]
    (tmp_path / "x.json").write_text(json.dumps({"x_star": hidden}))
    out = tmp_path / "s"
    assert cli.main(["simulate", *instance_args("striped_8fuel"), "--factors-json",
                     str(tmp_path / "x.json"), "--out", str(out)]) == 0
    for g in (out / "scars").glob("*.asc"):
        assert g.read_bytes() == (DATA / "striped_8fuel" / "scars" / g.name).read_bytes()


def test_compare_self(capsys):
    g = DATA / "homogeneous_20x20" / "scars" / "scar_00420.asc"
    assert cli.main(["compare", str(g), str(g), "--format", "json"]) == 0
    m = json.loads(capsys.readouterr().out)
    assert m["mse"] == 0 and m["ssim"] == 1 and m["frobenius"] == 0 and m["hamming"] == 0
    assert cli.main(["compare", str(g), str(g)]) == 0
    header, values = capsys.readouterr().out.splitlines()
    assert header == "frobenius,hamming,mse,ssim"


def test_compare_dimension_mismatch(tmp_path, capsys):
    write_burn_grid(np.zeros((3, 3), dtype=np.uint8), tmp_path / "a.asc")
    write_burn_grid(np.zeros((3, 4), dtype=np.uint8), tmp_path / "b.asc")
    assert cli.main(["compare", str(tmp_path / "a.asc"), str(tmp_path / "b.asc")]) == 1
    assert "incompatible grid dimensions" in capsys.readouterr().err


def test_calibrate_fms_32_values(tmp_path):
    out = tmp_path / "cal"
    argv = ["calibrate", *instance_args("striped_8fuel"), "--observed",
            str(DATA / "striped_8fuel" / "scars"), "--mode", "fms", "--max-evals", "80",
            "--out", str(out)]
    assert cli.main(argv) == 0
    res = json.loads((out / "result.json").read_text())
    assert len(res["x_star_flat"]) == 32
    assert res["final_error"] <= res["initial_error"]
    trace = (out / "trace.csv").read_text().splitlines()
    assert trace[0] == "neval,f_incumbent" and len(trace) == 1 + res["optimizer"]["neval"]


def test_calibrate_mu_presets(tmp_path):
    base = ["calibrate", *instance_args("homogeneous_20x20"), "--observed",
            str(DATA / "homogeneous_20x20" / "scars"), "--max-evals", "20"]
    assert cli.main(base + ["--mu", "final-only", "--out", str(tmp_path / "f")]) == 0
    m = json.loads((tmp_path / "f" / "manifest.json").read_text())
    assert m["mu"] == [0, 0, 0, 0, 0, 0, 1]
    assert cli.main(base + ["--mu", "custom-file", "--out", str(tmp_path / "c")]) == 1
    (tmp_path / "mu.txt").write_text("0 0 0 1 0 0 1\n")
    assert cli.main(base + ["--mu", "custom-file", "--mu-file", str(tmp_path / "mu.txt"),
                            "--out", str(tmp_path / "c")]) == 0
    assert not (tmp_path / "x").exists()


def test_realtime_and_benchmark(tmp_path, capsys):
    common = [*instance_args("homogeneous_20x20"), "--observed",
              str(DATA / "homogeneous_20x20" / "scars"), "--max-evals", "30"]
    assert cli.main(["realtime", *common, "--out", str(tmp_path / "rt")]) == 0
    steps = json.loads((tmp_path / "rt" / "realtime.json").read_text())["steps"]
    assert len(steps) == 7 and all(s["final_error"] <= s["initial_error"] for s in steps)
    assert (tmp_path / "rt" / "trace.csv").read_text().startswith("step,neval,f_incumbent")
    assert cli.main(["benchmark", *common, "--algorithms", "nelder-mead,pattern-search,bobyqa",
                     "--out", str(tmp_path / "b")]) == 0
    rows = (tmp_path / "b" / "benchmark.csv").read_text().splitlines()
    assert rows[0].split(",")[:4] == ["algorithm", "NEVAL", "RUNTIME", "MinValue"]
    assert len(rows) == 4
    capsys.readouterr()


@pytest.mark.parametrize("argv", [
    ["simulate", "--bogus"],
    ["frobnicate"],
    ["simulate", "--fuels", "missing.asc", "--fuel-table", "m.csv", "--weather", "w.csv",
     "--ignition", "1,1", "--out", "o"],
    ["benchmark", *instance_args("homogeneous_20x20"), "--observed",
     str(DATA / "homogeneous_20x20" / "scars"), "--algorithms", "cobyla", "--out", "o"],
])
def test_validation_exit_code(argv, tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    assert cli.main(argv) == 1
    assert "error" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_runtime_failure_leaves_nothing(tmp_path, monkeypatch, capsys):
    def boom(*a, **k):
        raise RuntimeError("simulated crash")

    monkeypatch.setattr(cli, "format_ascii_grid", boom)
    out = tmp_path / "sim"
    assert cli.main(["simulate", *instance_args("circle_5x5"), "--out", str(out)]) == 2
    assert "runtime failure" in capsys.readouterr().err
    assert not out.exists()
    assert not [p for p in tmp_path.iterdir() if p.name.startswith(".rosfit-staging")]


def test_ignition_flag_and_bad_ignition(tmp_path):
    args = instance_args("circle_5x5", ignition_flag=False)
    assert cli.main(["simulate", *args, "--ignition", "2,2", "--out", str(tmp_path / "a"),
                     "--horizon", "60"]) == 0
    assert load_burn_grid(tmp_path / "a" / "scars" / "scar_00060.asc").sum() == 25
    assert cli.main(["simulate", *args, "--ignition", "9,9", "--out", str(tmp_path / "b")]) == 1


def test_console_script():
    r = subprocess.run([sys.executable, "-m", "rosfit.cli", "--version"], capture_output=True,
                       text=True)
    assert r.returncode == 0 and r.stdout.startswith("rosfit ")
