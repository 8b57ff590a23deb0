import json
import math

import numpy as np
import pytest

from qpforce.cli import main
from qpforce.classify import SCHEMA_VERSION


@pytest.fixture
def files(tmp_path):
    rigid = tmp_path / "rigid.toml"
    rigid.write_text("family = \"rigid\"\n[params]\nrho = 0.25\n")
    dep = tmp_path / "dep.toml"
    dep.write_text(f"family = \"rigid\"\n[params]\nrho = {(1 + (math.sqrt(5) - 1) / 2) / 2!r}\n")
    attr = tmp_path / "attr.json"
    attr.write_text(json.dumps({"family": "attracting-graph"}))
    diag = tmp_path / "diag.toml"
    diag.write_text('m11 = "2"\nm12 = "0"\nm21 = "0"\nm22 = "0.5"\n')
    bad = tmp_path / "bad.toml"
    bad.write_text('family = "arnold"\n[params]\nc = 0.1\nK = 3.0\n')
    return {"rigid": rigid, "dep": dep, "attr": attr, "diag": diag, "bad": bad, "dir": tmp_path}


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_rotnum(capsys, files):
    code, out, _ = run(capsys, "rotnum", "--map", files["rigid"], "--n", 1000)
    data = json.loads(out)
    assert code == 0 and data["schema_version"] == SCHEMA_VERSION
    assert data["rotation"]["value"] == pytest.approx(0.25, abs=1e-12)
    for flag in (["--method", "weighted"], ["--fibre-avg", "--grid", 16]):
        code, out, _ = run(capsys, "rotnum", "--map", files["rigid"], "--n", 1000, *flag)
        assert json.loads(out)["rotation"]["value"] == pytest.approx(0.25, abs=1e-12)


def test_rotnum_csv(capsys, files):
    code, out, _ = run(capsys, "rotnum", "--map", files["rigid"], "--n", 100, "--format", "csv")
    head, row = out.splitlines()
    assert head == "value,spread,n,method" and row.startswith("0.25")


def test_deps(capsys):
    code, out, _ = run(capsys, "deps", "--rho", (1 + (math.sqrt(5) - 1) / 2) / 2)
    rel = json.loads(out)["relation"]
    assert (rel["l"], rel["k"], rel["q"]) == (-1, -1, 2)
    code, out, _ = run(capsys, "deps", "--omega", math.sqrt(2) - 1, "--rho", math.sqrt(3) - 1,
                       "--max-q", 50, "--max-k", 50, "--tol", 1e-9)
    assert json.loads(out)["relation"] is None
    code, _, err = run(capsys, "deps")
    assert code != 0 and "error" in err


def test_deviations_with_trace(capsys, files):
    trace = files["dir"] / "trace.csv"
    code, out, _ = run(capsys, "deviations", "--map", files["rigid"], "--rho", 0.25, "--n", 10**4,
                       "--orbits", 4, "--trace", trace, "--decimate", 100)
    data = json.loads(out)
    assert data["regularity"]["verdict"] == "regular"
    t = np.loadtxt(trace, delimiter=",", skiprows=1)
    assert t[0, 0] == 0 and t[1, 0] == 100


def test_graph(capsys, files):
    out_csv = files["dir"] / "g.csv"
    code, out, _ = run(capsys, "graph", "--map", files["attr"], "--grid", 256, "--out", out_csv)
    data = json.loads(out)
    assert data["graph"]["converged"]
    assert data["graph"]["invariance_residual"] < 10 * data["graph"]["grid_modulus"]
    assert out_csv.exists() and (files["dir"] / "g.json").exists()


def test_strip(capsys, files):
    code, out, _ = run(capsys, "strip", "--map", files["dep"], "--grid", 64, "--n", 50)
    s = json.loads(out)["strip"]
    assert (s["q"], s["k"]) == (2, 1) and s["width"] < 1e-12 and s["contained"]
    code, _, err = run(capsys, "strip", "--map", files["rigid"], "--rho", math.sqrt(2) - 1, "--tol", 1e-12)
    assert code != 0


def test_semiconj(capsys, files):
    out_csv = files["dir"] / "H.csv"
    indep = files["dir"] / "indep.toml"
    indep.write_text(f"family = \"rigid\"\n[params]\nrho = {math.sqrt(3) - 1!r}\n")
    code, out, _ = run(capsys, "semiconj", "--map", indep, "--rho", math.sqrt(3) - 1,
                       "--r-grid", 16, "--grid", 16, "--n", 100, "--x-resolution", 16, "--out", out_csv)
    d = json.loads(out)["semiconjugacy"]
    assert set(d) >= {"defect", "quantization", "ordered"}
    assert d["ordered"] and d["defect"] <= 1 / 16
    assert np.loadtxt(out_csv, delimiter=",", skiprows=1).shape == (256, 3)


def test_lyapunov(capsys, files):
    code, out, _ = run(capsys, "lyapunov", "--cocycle", files["diag"], "--n", 10**4, "--seeds", 2)
    d = json.loads(out)["lyapunov"]
    # random start vectors leave a transient of order 1/n
    assert d["value"] == pytest.approx(math.log(2), abs=1e-3) and d["degree"] == 0
    code, _, err = run(capsys, "lyapunov", "--map", files["rigid"])
    assert code != 0


def test_transitive(capsys, files):
    hits = files["dir"] / "hits.csv"
    code, out, _ = run(capsys, "transitive", "--map", files["dep"], "--grid", 16, "--n", 2000, "--hits", hits)
    assert json.loads(out)["transitivity"]["verdict"] == "obstruction-found"
    assert np.loadtxt(hits, delimiter=",").shape == (256, 256)


def test_classify_and_determinism(capsys, files):
    argv = ["classify", "--map", files["dep"], "--budget", "regularity_n=10000", "--budget", "strip_grid=64"]
    code, a, _ = run(capsys, *argv)
    assert code == 0 and json.loads(a)["quadrant"] == "IA"
    out = files["dir"] / "rep.json"
    run(capsys, *argv, "--out", out)
    assert out.read_text() == a


def test_sweep(capsys, files):
    code, out, _ = run(capsys, "sweep", "--family", "rigid", "--stage", "rotnum", "--param", "rho=0.1,0.2",
                       "--budget", "rotation_n=100", "--format", "csv")
    lines = out.splitlines()
    assert lines[0] == "rho,rho_estimate,spread,error" and len(lines) == 3
    code, out, _ = run(capsys, "sweep", "--family", "rigid", "--stage", "rotnum", "--param", "rho=")
    assert json.loads(out)["rows"] == []


def test_config_errors_exit_nonzero(capsys, files):
    code, _, err = run(capsys, "rotnum", "--map", files["bad"])
    assert code != 0 and "error" in err
    code, _, err = run(capsys, "rotnum", "--map", files["dir"] / "missing.toml")
    assert code != 0
    code, _, err = run(capsys, "rotnum")
    assert code != 0
    code, _, err = run(capsys, "classify", "--map", files["rigid"], "--budget", "nope=1")
    assert code != 0
