import csv
import json
import math
import subprocess
import sys

import pytest

from magtrap import mode_analysis as ma
from magtrap import reporting
from magtrap.classical_dynamics import read_trajectory_csv
from magtrap.cli import main
from magtrap.trap_model import ATOM, TrapConfig, format_config


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_modes_sweep(tmp_path, capsys):
    path = tmp_path / "sweep.csv"
    code, out, _ = run(capsys, "modes", "--k-min", "0.01", "--k-max", "0.6", "--steps", "600",
                       "--out", str(path))
    assert code == 0
    assert "K_c = 0.3849001795" in out and "1.7320508076" in out
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ma.SWEEP_HEADER
    assert len(rows) == 601 and all(len(r) == 8 for r in rows)
    back = ma.read_sweep_csv(path)
    step = back[1]["K"] - back[0]["K"]
    flips = [b["K"] for a, b in zip(back, back[1:]) if a["stable"] != b["stable"]]
    assert len(flips) == 1 and abs(flips[0] - math.sqrt(4 / 27)) <= step


def test_modes_to_stdout(capsys):
    code, out, err = run(capsys, "modes", "--steps", "5")
    assert code == 0
    assert out.splitlines()[0] == ",".join(ma.SWEEP_HEADER)
    assert "K_c" in err


@pytest.mark.parametrize("argv", [
    ["modes", "--steps", "1"],
    ["modes", "--k-min", "0.5", "--k-max", "0.1"],
    ["nonsense"],
    ["modes", "--bogus"],
    [],
])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert err


def test_unwritable_output(capsys, tmp_path):
    code, _, err = run(capsys, "modes", "--steps", "3", "--out", str(tmp_path / "no" / "x.csv"))
    assert code == 2 and "I/O" in err


def test_simulate_conserves_lambda(tmp_path, capsys):
    out_csv = tmp_path / "traj.csv"
    summary = tmp_path / "summary.json"
    code, out, _ = run(capsys, "simulate", "--k", "0.1", "--kick", "1e-3", "--t-final", "628",
                       "--out", str(out_csv), "--summary", str(summary))
    assert code == 0
    data = json.loads(out)
    assert data["lambda_drift_rel"] < 1e-9
    assert reporting.read_json(summary) == data
    traj = read_trajectory_csv(out_csv, K=0.1)
    assert traj.times[-1] == pytest.approx(628, abs=0.01)


def test_simulate_growth_rate_matches_mode_spectrum(capsys):
    code, out, _ = run(capsys, "simulate", "--k", "0.5", "--kick", "1e-6", "--t-final", "60")
    data = json.loads(out)
    im = max(r.imag for r in ma.secular_roots(0.5, "-"))
    assert data["growth_rate_scaled"] == pytest.approx(im, rel=0.05)


def test_simulate_precessional_friction_destabilizes(capsys):
    code, out, _ = run(capsys, "simulate", "--k", "0.1", "--rp", "1e-4", "--mode", "precessional",
                       "--t-final", "300")
    data = json.loads(out)
    assert data["growth_rate_scaled"] > 0
    assert data["growth_rate_scaled"] == pytest.approx(data["predicted_growth_rate_scaled"],
                                                       rel=0.05)


def test_simulate_with_physical_config(tmp_path, capsys):
    cfg = TrapConfig.from_scaled(0.1, 50.0)
    cfg_path = tmp_path / "toy.cfg"
    cfg_path.write_text(format_config(cfg))
    code, out, _ = run(capsys, "simulate", "--config", str(cfg_path), "--t-final", "20")
    assert code == 0
    data = json.loads(out)
    assert data["k"] == pytest.approx(0.1)
    assert data["t_final_s"] == pytest.approx(20 / 50.0)


def test_simulate_refuses_unresolvable_preset(tmp_path, capsys):
    # an atom precesses ~1e8 times per vibration: not integrable at this dt
    cfg_path = tmp_path / "atom.cfg"
    cfg_path.write_text(format_config(ATOM))
    code, _, err = run(capsys, "simulate", "--config", str(cfg_path), "--t-final", "20")
    assert code == 1 and "precession" in err


def test_simulate_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("b0_gauss = 100\nbperp_gauss_per_cm = 10\nspin_half = true\nmass_gram = 1\n")
    code, _, err = run(capsys, "simulate", "--config", str(bad))
    assert code == 2 and "mu_erg_per_gauss" in err
    code, _, err = run(capsys, "simulate", "--config", str(bad), "--k", "0.1")
    assert code == 2
    code, _, err = run(capsys, "simulate")
    assert code == 2


def test_lifetime_presets(tmp_path, capsys):
    for preset, target in (("neutron", 1e5), ("atom", 1e8)):
        path = tmp_path / f"{preset}.json"
        code, out, _ = run(capsys, "lifetime", "--preset", preset, "--json", str(path))
        assert code == 0
        data = json.loads(path.read_text())
        assert data == json.loads(out)
        assert abs(math.log10(data["log10_t_esc_closed"] / target)) < math.log10(3)
        assert data["outside_validity"] is False


def test_lifetime_from_config_and_scaled_input(tmp_path, capsys):
    cfg_path = tmp_path / "atom.cfg"
    cfg_path.write_text(format_config(ATOM))
    code, out, _ = run(capsys, "lifetime", "--config", str(cfg_path))
    assert json.loads(out)["k"] == ATOM.K
    code, out, _ = run(capsys, "lifetime", "--k-with-units", "0.5", "0.1")
    data = json.loads(out)
    assert code == 0 and data["outside_validity"] is True
    assert data["k"] == pytest.approx(0.5)
    assert data["t_vib_s"] == pytest.approx(0.1)


def test_lifetime_needs_a_source(capsys):
    code, _, _ = run(capsys, "lifetime")
    assert code == 2


def test_table(capsys):
    code, out, _ = run(capsys, "table")
    assert code == 0
    assert "neutron" in out and "atom" in out
    assert "MISMATCH" not in out
    rows = reporting.table_rows()
    assert not reporting.table_mismatches(rows)
    assert rows["neutron"]["k"] == pytest.approx(5.27e-6, rel=1e-2)


def test_check_passes_and_names_failures(capsys):
    code, out, _ = run(capsys, "check")
    assert code == 0
    assert out.count("PASS") == len(reporting.CHECKS)
    code, out, _ = run(capsys, "check", "--perturb", "critical_K=1e-6")
    assert code == 1
    assert "FAIL  critical_K" in out and "failed: critical_K" in out
    code, _, _ = run(capsys, "check", "--perturb", "nope=1")
    assert code == 2


@pytest.mark.parametrize("name", list(reporting.CHECKS))
def test_every_check_can_fail(name):
    offset = {"spin_up_unstable": 10.0, "preset_table": 1.0, "dos_r_independence": 1e-6}.get(
        name, 1e-6)
    results = {r.name: r for r in reporting.run_checks({name: offset})}
    assert not results[name].passed
    assert all(r.passed for n, r in results.items() if n != name)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "magtrap", "table"], capture_output=True,
                          text=True, timeout=60)
    assert proc.returncode == 0
    assert "log10 T_esc" in proc.stdout
