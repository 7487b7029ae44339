import json
import subprocess
import sys

import numpy as np
import pytest

from distorder import MuSpec, TimeSeries
from distorder.cli import main
from distorder.inverse import data_grid
from distorder.series import read_field_csv, read_timeseries_csv


@pytest.fixture(scope="module")
def inputs(tmp_path_factory):
    d = tmp_path_factory.mktemp("inputs")
    MuSpec.constant(1.0, 21).to_json(d / "mu_one.json")
    MuSpec.from_function(lambda a: a + 0.2, 21).to_json(d / "mu_lin.json")
    MuSpec.power_surrogate(1.0).to_json(d / "heat.json")
    t = data_grid(20.0, 800)
    TimeSeries(t, np.ones_like(t)).to_csv(d / "g0.csv")
    TimeSeries(t, 1 - 7 * t).to_csv(d / "g0_bad.csv")
    return d


def run(*argv):
    return main([str(a) for a in argv])


def read_bytes(folder):
    return {p.name: p.read_bytes() for p in sorted(folder.iterdir())}


def test_phi_and_kernel(inputs, tmp_path):
    assert run("phi", "--mu", inputs / "mu_one.json", "--z", 2, 10, "--out", tmp_path) == 0
    tab = np.loadtxt(tmp_path / "phi.csv", delimiter=",", skiprows=1)
    assert np.allclose(tab[:, 1], (tab[:, 0] - 1) / np.log(tab[:, 0]), rtol=1e-13)
    assert run("kernel", "--mu", inputs / "mu_one.json", "--out", tmp_path, "--nt", 11) == 0
    k = read_timeseries_csv(tmp_path / "kernel.csv")
    assert len(k) == 10 and np.all(k.value > 0)


def test_dode_matches_exponential(inputs, tmp_path):
    args = ("dode", "--mu", inputs / "heat.json", "--lam", 2, "--nt", 201, "--out", tmp_path)
    assert run(*args) == 0
    v = read_timeseries_csv(tmp_path / "dode.csv")
    assert np.max(np.abs(v.value - np.exp(-2 * v.t))) < 1e-4


def test_forward_both_heat(inputs, tmp_path):
    assert run("forward", "--mu", inputs / "heat.json", "--u0", "sine:1", "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "discrepancy.json").read_text())
    assert rep["max_abs_difference"] <= 1e-4
    f = read_field_csv(tmp_path / "field_spectral.csv")
    assert f.values.shape == (41, 41)


def test_forward_zero_data(inputs, tmp_path):
    args = ("forward", "--mu", inputs / "mu_one.json", "--method", "theta", "--out", tmp_path)
    assert run(*args, "--nt", 6, "--nx", 5) == 0
    f = read_field_csv(tmp_path / "field.csv")
    assert np.all(f.values == 0)


def test_determinism(inputs, tmp_path):
    outs = []
    for rep in range(2):
        out = tmp_path / f"r{rep}"
        assert run("phi", "--mu", inputs / "mu_lin.json", "--out", out) == 0
        assert run("kernel", "--mu", inputs / "mu_lin.json", "--out", out, "--nt", 21) == 0
        assert run("dode", "--mu", inputs / "mu_lin.json", "--out", out, "--nt", 21) == 0
        fwd = ("forward", "--mu", inputs / "mu_lin.json", "--u0", "sine:2", "--out", out)
        assert run(*fwd, "--nt", 11, "--nx", 11) == 0
        syn = ("synth", "--mu", inputs / "mu_lin.json", "--g0", inputs / "g0.csv", "--out", out)
        assert run(*syn, "--noise", 0.01, "--seed", 11) == 0
        inv = ("invert", "--data", out / "trace.csv", "--g0", inputs / "g0.csv", "--out", out)
        assert run(*inv, "--reg", 1) == 0
        outs.append(read_bytes(out))
    assert outs[0].keys() == outs[1].keys()
    assert len(outs[0]) == 10
    for name in outs[0]:
        assert outs[0][name] == outs[1][name], name


@pytest.mark.parametrize(
    "kind, probe, tol", [("interior", 0.5, 0.02), ("flux", 1.0, 0.05)]
)
def test_synth_invert_loop(inputs, tmp_path, kind, probe, tol):
    common = ("--kind", kind, "--probe", probe, "--out", tmp_path)
    assert run("synth", "--mu", inputs / "mu_one.json", "--g0", inputs / "g0.csv", *common) == 0
    assert run("invert", "--data", tmp_path / "trace.csv", "--g0", inputs / "g0.csv", *common) == 0
    rec = MuSpec.from_json(tmp_path / "recovered_mu.json")
    err = np.sqrt(np.trapezoid((rec.values - 1) ** 2, rec.nodes))
    assert err <= tol
    diag = json.loads((tmp_path / "diagnostics.json").read_text())
    assert diag["status"] == "ok" and diag["n_samples"] == 40


def test_missing_input_exit_2(inputs, tmp_path, capsys):
    assert run("phi", "--mu", tmp_path / "nope.json", "--out", tmp_path) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == 2 and "input not found" in err["message"]
    assert run("synth", "--mu", inputs / "mu_one.json", "--g0", inputs / "g0.csv",
               "--probe", 1.5, "--out", tmp_path) == 2
    assert run("synth", "--mu", inputs / "mu_one.json", "--g0", inputs / "g0.csv",
               "--noise", 0.1, "--out", tmp_path) == 2


def test_excitation_failure_exit_3(inputs, tmp_path, capsys):
    zeros = TimeSeries(data_grid(), np.zeros(401))
    zeros.to_csv(tmp_path / "d.csv")
    code = run("invert", "--data", tmp_path / "d.csv", "--g0", inputs / "g0_bad.csv", "--out", tmp_path)
    assert code == 3
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ExcitationError" and err["sample_index"] == 1
    diag = json.loads((tmp_path / "diagnostics.json").read_text())
    assert diag["status"] == "failed" and diag["sample_index"] == 1
    tab = np.genfromtxt(tmp_path / "diagnostics.csv", delimiter=",", names=True)
    assert tab.size == 40 and np.all(np.isnan(tab["phi"]))


def test_config_file_and_flag_precedence(inputs, tmp_path):
    cfg = {"mu": str(inputs / "mu_one.json"), "z": [3.0], "out": str(tmp_path / "a")}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    assert run("phi", "--config", tmp_path / "cfg.json") == 0
    assert np.loadtxt(tmp_path / "a" / "phi.csv", delimiter=",", skiprows=1).shape == (2,)
    assert run("phi", "--config", tmp_path / "cfg.json", "--z", 1, 2, 4, "--out", tmp_path / "b") == 0
    assert np.loadtxt(tmp_path / "b" / "phi.csv", delimiter=",", skiprows=1).shape == (3, 2)


def test_console_entry_point(inputs, tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "distorder.cli", "phi", "--mu", str(inputs / "mu_one.json"),
         "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "phi.csv").exists()
