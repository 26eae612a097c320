import json
import subprocess
import sys

import pytest

from gaugearb import cli
from gaugearb.errors import ConfigError


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def report(path):
    return json.loads((path / "report.json").read_text())


@pytest.fixture(scope="module")
def reference_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("ref")
    assert cli.main(["simulate", "--out", str(root / "sim")]) == 0
    assert cli.main(["detect", "--input", str(root / "sim" / "prices.csv"),
                     "--out", str(root / "det"), "--null_dim", "2"]) == 0
    return root


def test_simulate_detect_backtest(reference_run, tmp_path, capsys):
    sim = report(reference_run / "sim")
    det = report(reference_run / "det")
    true = sim["summary"]["true_a2"]
    assert sim["summary"]["null_dim"] == 2
    assert det["summary"]["mean"] == pytest.approx(true, rel=0.2)
    assert det["gauge_spread"]["rel_std_max"] < 0.01
    for name in ("a2.csv", "alpha.csv", "eta2.csv", "spectra.csv", "gauge.csv",
                 "per_numeraire.csv", "signal.npz"):
        assert (reference_run / "det" / name).exists()
    header = (reference_run / "det" / "a2.csv").read_text().splitlines()[0]
    assert header == "time [step],a2_hat [1/step^2],noise_lo [1/step^2],noise_hi [1/step^2]"

    code, out, _ = run(["backtest", "--input", reference_run / "sim" / "prices.csv",
                        "--signal", reference_run / "det" / "signal.npz", "--out", tmp_path,
                        "--benchmark", "X3"], capsys)
    assert code == 0 and json.loads(out)["status"] == "ok"
    bt = report(tmp_path)["summary"]
    assert bt["identity_check"] == "PASS"
    assert bt["final_value"] == pytest.approx(det["summary"]["mean"] * det["summary"]["n"],
                                              rel=1e-10)
    assert (tmp_path / "benchmark.csv").exists()


def snapshot(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


def test_report_provenance_and_determinism(tmp_path, capsys):
    sim = ["simulate", "--n_assets", "6", "--n_factors", "3", "--n_steps", "200",
           "--eta2", "1e-6", "--out", tmp_path / "sim"]
    det = ["detect", "--input", tmp_path / "sim" / "prices.csv", "--out", tmp_path / "det",
           "--window_len", "50", "--rolling", "yes"]
    assert run(sim, capsys)[0] == 0 and run(det, capsys)[0] == 0
    first = snapshot(tmp_path / "sim"), snapshot(tmp_path / "det")
    assert run(sim, capsys)[0] == 0 and run(det, capsys)[0] == 0
    assert (snapshot(tmp_path / "sim"), snapshot(tmp_path / "det")) == first
    assert "clean_prices.csv" in first[0] and "signal.npz" in first[1]
    rep = report(tmp_path / "det")
    assert set(rep) == {"config", "summary", "spectra", "gauge_spread", "provenance"}
    prov = rep["provenance"]
    assert prov["inputs"][str(tmp_path / "sim" / "prices.csv")].startswith("sha256:")
    assert {"package", "numpy", "scipy", "python"} <= set(prov)


def test_constant_panel_warns(tmp_path, capsys):
    rows = ["time,A,B,C"] + [f"{t},1.0,2.0,3.0" for t in range(30)]
    (tmp_path / "flat.csv").write_text("\n".join(rows) + "\n")
    code, _, _ = run(["detect", "--input", tmp_path / "flat.csv", "--out", tmp_path / "o",
                      "--window_len", "10", "--add_numeraire", "true"], capsys)
    assert code == 0
    summary = report(tmp_path / "o")["summary"]
    assert summary["mean"] == 0.0 and summary["snr"] == "inf"
    assert any("empty spectrum" in w for w in summary["warnings"])


def test_config_file_and_overrides(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[detect]\ninput = a.csv\nout = o\nwindow_len = 50\nnull_dim = 3\n"
                   "[simulate]\nout = elsewhere\n")
    cfg = cli.resolve_config("detect", ini, {"null_dim": "1"})
    assert cfg["window_len"] == 50 and cfg["null_dim"] == 1 and cfg["rolling"] is False
    assert str(cfg["input"]) == "a.csv"


def test_config_problems_reported_together(tmp_path, capsys):
    ini = tmp_path / "bad.ini"
    ini.write_text("[detect]\nwindow_len = ten\ncolour = blue\n")
    with pytest.raises(ConfigError) as exc:
        cli.resolve_config("detect", ini, {"null_dim": "0"})
    probs = exc.value.problems
    assert any("unknown key 'colour'" in p for p in probs)
    assert any(p.startswith("window_len") for p in probs)
    assert any(p.startswith("input: required") for p in probs)
    assert any("null_dim must be >= 1" in p for p in probs)
    code, _, err = run(["detect", "--config", ini, "--null_dim", "0"], capsys)
    assert code == 2
    payload = json.loads(err)
    assert payload["error"] == "config" and len(payload["problems"]) == len(probs)


def test_choice_validation(tmp_path, capsys):
    code, _, err = run(["pde", "--out", tmp_path, "--payoff", "digital"], capsys)
    assert code == 2 and "must be one of call, put" in err


def test_data_error_exit_code(tmp_path, capsys):
    (tmp_path / "bad.csv").write_text("time,A\n0,1\n1,-2\n")
    code, _, err = run(["detect", "--input", tmp_path / "bad.csv", "--out", tmp_path], capsys)
    assert code == 3 and "line 3, column 'A'" in err
    code, _, err = run(["detect", "--input", tmp_path / "missing.csv", "--out", tmp_path], capsys)
    assert code == 3 and "cannot read" in err


def test_numerical_error_exit_code(tmp_path, capsys):
    code, _, err = run(["pde", "--out", tmp_path, "--arbitrage", "volatility",
                        "--sigma_tilde", "5.0", "--n_space", "201", "--n_time", "20"], capsys)
    assert code == 4
    assert json.loads(err)["error"] == "numerical"


def test_internal_error_exit_code(tmp_path, capsys, monkeypatch):
    def boom(cfg):
        raise RuntimeError("unexpected")

    monkeypatch.setitem(cli.COMMANDS, "pde", boom)
    code, _, err = run(["pde", "--out", tmp_path], capsys)
    assert code == 5 and "RuntimeError" in err


def test_price_command(tmp_path, capsys):
    code, _, _ = run(["price", "--out", tmp_path, "--asset", "1"], capsys)
    assert code == 0
    s = report(tmp_path)["summary"]
    assert abs(s["z_score"]) < 3
    assert s["initial_price"] == 100.0
    code, _, _ = run(["price", "--out", tmp_path, "--asset", "7"], capsys)
    assert code == 2


def test_pde_command(tmp_path, capsys):
    code, _, _ = run(["pde", "--out", tmp_path, "--n_space", "201", "--n_time", "100"], capsys)
    assert code == 0
    s = report(tmp_path)["summary"]
    assert s["value_at_spot"] == pytest.approx(10.450583572185565, rel=1e-3)
    lines = (tmp_path / "pde_slice.csv").read_text().splitlines()
    assert lines[0] == "price [numeraire],value_t0 [numeraire],payoff [numeraire]"
    assert len(lines) == 202


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "gaugearb", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "gaugearb" in proc.stdout
