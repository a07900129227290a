import json
import math
import subprocess
import sys

import pytest

from jclattice import cli
from jclattice.dynamics import IntegrationError
from jclattice.reports import read_csv

TWO_PI = 2 * math.pi


def body(path):
    return "".join(line for line in path.read_text().splitlines(keepends=True) if not line.startswith("#"))


def test_defaults():
    cfg = cli.parse_config()
    p = cfg.system_params()
    assert p.omega0 == pytest.approx(TWO_PI * 10e9)
    assert p.g == pytest.approx(TWO_PI * 100e6)
    assert p.J == pytest.approx(TWO_PI * 50e6)
    assert p.kappa == pytest.approx(TWO_PI * 10e3)
    assert p.gamma_q == pytest.approx(TWO_PI * 100e3)
    assert cfg.epsilon_hz == 5e6
    assert p.polariton_damping == pytest.approx(TWO_PI * 55e3)


def test_gamma_p_override(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"gamma_p_hz": 100e3}))
    p = cli.parse_config(path).system_params()
    assert p.polariton_damping == pytest.approx(TWO_PI * 100e3)


def test_overrides_take_precedence(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"g_hz": 1e9, "sectors": [0, 1]}))
    cfg = cli.parse_config(path, ["g_hz=2e9", "model=full_jc", "dissipation=false"])
    assert cfg.g_hz == 2e9 and cfg.model == "full_jc" and cfg.dissipation is False
    assert cfg.sectors == [0, 1]


def test_unknown_key_rejected(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"omega_0_hz": 1e9}))
    with pytest.raises(cli.ConfigError, match="omega_0_hz"):
        cli.parse_config(path)
    assert cli.main(["spectrum", "--config", str(path), "--out", str(tmp_path)]) == 2
    assert "omega_0_hz" in capsys.readouterr().err


def test_malformed_numeric_names_key():
    with pytest.raises(cli.ConfigError, match="J_hz"):
        cli.parse_config(overrides=["J_hz=fifty"])
    with pytest.raises(cli.ConfigError, match="photon_cutoff"):
        cli.parse_config(overrides=["photon_cutoff=2.5"])


@pytest.mark.parametrize(
    "override",
    ["g_hz=-1", "omega0_hz=nan", "kappa_hz=-5", "model=ising", "photon_cutoff=0", "rtol=0", "noequals"],
)
def test_invalid_values(override):
    with pytest.raises(cli.ConfigError):
        cli.parse_config(overrides=[override])


def test_epsilon_above_j_warns():
    with pytest.warns(UserWarning, match="exceeds J"):
        cli.parse_config(overrides=["epsilon_hz=60e6"])


def test_bad_config_files(tmp_path):
    assert cli.main(["spectrum", "--config", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["spectrum", "--config", str(bad)]) == 2
    bad.write_text("[1, 2]")
    assert cli.main(["spectrum", "--config", str(bad)]) == 2


def test_unknown_experiment():
    assert cli.main(["plot"]) == 2


def test_spectrum_csv(tmp_path):
    assert cli.main(["spectrum", "--out", str(tmp_path), "--set", "sectors=[0,1]", "--set", "g_hz=1e9"]) == 0
    meta, header, rows = read_csv(tmp_path / "spectrum.csv")
    assert header == ["N", "m", "energy_over_2pi_Hz", "translation_label_re", "translation_label_im"]
    assert len(rows) == 1 + 4
    # single-polariton band of the lower-polariton model, in Hz above the vacuum
    band = sorted(float(r[2]) for r in rows[1:])
    assert band[0] == pytest.approx(10e9 - 1e9 - 50e6, rel=1e-9)
    assert meta["g_over_2pi_Hz"] == "1000000000"
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["config"]["experiment"] == "spectrum"
    assert {"numpy", "scipy", "python", "jclattice"} <= set(manifest["versions"])
    assert manifest["wall_time_s"] >= 0


def test_degeneracy(tmp_path, capsys):
    assert cli.main(["degeneracy", "--out", str(tmp_path), "--set", "g_hz=1e9"]) == 0
    _, _, rows = read_csv(tmp_path / "degeneracy.csv")
    mult = {(int(r[0]), int(r[2])) for r in rows}
    assert {(0, 1), (1, 4), (2, 6)} <= mult
    assert "N=2" in capsys.readouterr().out


def test_protocol_prints_fidelity(tmp_path, capsys):
    assert cli.main(["protocol", "--out", str(tmp_path), "--set", "g_hz=1e9", "--set", "u_over_j=2"]) == 0
    line = [x for x in capsys.readouterr().out.splitlines() if x.startswith("fidelity:")][0]
    value = line.split()[1]
    assert len(value.split(".")[1]) == 6
    assert 0.5 < float(value) <= 1
    meta, header, rows = read_csv(tmp_path / "protocol.csv")
    assert header[0] == "time_s" and "fidelity" in header
    assert len(rows) == 3


def test_compensation_and_determinism(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["compensation", "--out", str(a)]) == 0
    assert cli.main(["compensation", "--out", str(b)]) == 0
    assert body(a / "compensation.csv") == body(b / "compensation.csv")
    _, header, rows = read_csv(a / "compensation.csv")
    assert header == ["delta_g_over_g", "delta_omega0_over_g", "Delta_over_g", "U_over_J"]
    assert len(rows) == 3 * 21


def test_spectrum_deterministic(tmp_path):
    for name in ("a", "b"):
        assert cli.main(["spectrum", "--out", str(tmp_path / name), "--set", "g_hz=1e9"]) == 0
    assert (tmp_path / "a" / "spectrum.csv").read_bytes() == (tmp_path / "b" / "spectrum.csv").read_bytes()


def test_sweep_commands(tmp_path):
    overrides = ["u_grid_points=2", "u_grid_max=2", "sweep_eps_over_j=[0.1]", "n_jobs=1"]
    assert cli.main(["sweep-u", "--out", str(tmp_path)] + [x for o in overrides for x in ("--set", o)]) == 0
    _, header, rows = read_csv(tmp_path / "fidelity_vs_u.csv")
    assert header == ["epsilon_over_J", "U_over_J", "fidelity"] and len(rows) == 2
    overrides = ["eps_grid_points=2", "eps_grid_min=0.1", "sweep_gamma_p_list=[0.0]", "n_jobs=1"]
    assert cli.main(["sweep-eps", "--out", str(tmp_path)] + [x for o in overrides for x in ("--set", o)]) == 0
    _, header, rows = read_csv(tmp_path / "fidelity_vs_epsilon.csv")
    assert header == ["gamma_p_over_J", "epsilon_over_J", "fidelity"] and len(rows) == 2


def test_adiabatic_command(tmp_path, capsys):
    assert cli.main(["adiabatic", "--out", str(tmp_path), "--set", "g_hz=1e9", "--set", "ramp_ratio=10"]) == 0
    _, header, rows = read_csv(tmp_path / "adiabatic.csv")
    assert header[0] == "adiabaticity_ratio"
    assert float(rows[0][0]) == pytest.approx(10)
    assert "overlap:" in capsys.readouterr().out


def test_numerical_failure_exit_code(tmp_path, monkeypatch, capsys):
    def boom(cfg, out):
        raise IntegrationError("step size underflow")

    monkeypatch.setitem(cli.RUNNERS, "spectrum", boom)
    assert cli.main(["spectrum", "--out", str(tmp_path)]) == 3
    assert "step size underflow" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "jclattice", "compensation", "--out", str(tmp_path)], capture_output=True, text=True
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "compensation.csv").exists()
