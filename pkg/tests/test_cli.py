import csv
import io
import json
import math

import pytest

from gradion.cli import main

CONFIG_TEXT = (
    "schema_version: 1\n"
    "species: 171Yb+\n"
    "n_ions: {n_ions}\n"
    "frequency_units: Hz\n"
    "omega_z: 1.0e5\n"
    "gradient_b: {gradient}\n"
)


@pytest.fixture
def config_file(tmp_path):
    def make(n_ions=5, gradient=9.89):
        path = tmp_path / f"trap_{n_ions}.yaml"
        path.write_text(CONFIG_TEXT.format(n_ions=n_ions, gradient=gradient))
        return str(path)
    return make


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_design_json_report(config_file, capsys):
    code, out, err = run_cli(capsys, "design", config_file(), "--seed", "7")
    assert code == 0
    report = json.loads(out)
    assert report["schema_version"] == 1
    assert report["seed"] == 7
    assert report["tool"]["name"] == "gradion"
    assert report["config"]["n_ions"] == 5
    assert report["linearity"]["is_linear"] is True
    assert len(report["coupling"]["ions"]) == 5
    assert report["fidelity"]["spread"]["seed"] == 7
    assert 0.0 <= report["fidelity"]["gate_error"]["error_closed_form"] <= 1.0
    assert report["coupling"]["required_gradient_t_per_m"] > 0.0


def test_design_no_fidelity(config_file, capsys):
    code, out, _ = run_cli(capsys, "design", config_file(), "--no-fidelity")
    assert code == 0
    report = json.loads(out)
    assert report["fidelity"] is None


def test_design_reproducible_modulo_timestamp(config_file, capsys):
    path = config_file()
    _, first, _ = run_cli(capsys, "design", path, "--seed", "3")
    _, second, _ = run_cli(capsys, "design", path, "--seed", "3")
    a, b = json.loads(first), json.loads(second)
    a.pop("timestamp"), b.pop("timestamp")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_design_csv(config_file, capsys):
    code, out, _ = run_cli(capsys, "design", config_file(), "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 5
    assert "epsilon_c" in rows[0]
    assert "sigma_k_rad_per_s" in rows[0]


def test_design_output_file(config_file, capsys, tmp_path):
    target = tmp_path / "report.json"
    code, out, _ = run_cli(capsys, "design", config_file(), "--no-fidelity",
                           "--output", str(target))
    assert code == 0
    assert out == ""
    assert json.loads(target.read_text())["schema_version"] == 1


def test_malformed_config_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("species: 171Yb+\nomega_z: 1.0e5\n")  # n_ions missing
    code, _, err = run_cli(capsys, "design", str(bad))
    assert code == 2
    assert "n_ions" in err


def test_missing_config_exit_code(capsys):
    code, _, err = run_cli(capsys, "design", "/nonexistent/trap.yaml")
    assert code == 2
    assert "config error" in err


def test_modes_three_ion_ratios(config_file, capsys):
    code, out, _ = run_cli(capsys, "modes", config_file(n_ions=3))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    ratios = [float(r["frequency_over_omega_z"]) for r in rows]
    assert ratios == pytest.approx([1.0, math.sqrt(3.0), math.sqrt(29.0 / 5.0)],
                                   rel=1e-9)


def test_spectrum_identical_carriers_without_gradient(config_file, capsys):
    code, out, _ = run_cli(capsys, "spectrum", config_file(n_ions=2, gradient=0.0))
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 2
    assert float(rows[0]["carrier_hz"]) == pytest.approx(float(rows[1]["carrier_hz"]),
                                                         rel=1e-15)


def test_spectrum_json_gap(config_file, capsys):
    code, out, _ = run_cli(capsys, "spectrum", config_file(n_ions=4), "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["min_spectral_gap_rad_per_s"] is not None
    assert len(payload["ions"]) == 4


def test_table1_without_fidelity(capsys):
    code, out, _ = run_cli(capsys, "table1", "--no-fidelity")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 12  # six cells x (gradient, coupling)
    for row in rows:
        deviation = float(row["rel_deviation"])
        assert math.isfinite(deviation)
        assert abs(deviation) < 0.05
        assert row["quantity"] in ("gradient_t_per_m", "epsilon_c")


def test_evolve_blue_sideband_period(config_file, capsys):
    # one analytic pi pulse on the blue sideband: full transfer at the end,
    # half transfer at the midpoint, pinning the oscillation period.  The
    # strong gradient keeps the sideband fast against the carrier Stark shift.
    code, out, _ = run_cli(
        capsys, "evolve", config_file(n_ions=2, gradient=80.0), "--rabi-hz", "2000",
        "--sideband", "blue", "--pulses", "1.0", "--n-max", "10",
        "--time-samples", "9")
    assert code == 0
    header, body = out.split("\n", 1)
    params = json.loads(header[2:])
    assert params["epsilon_c"] > 0.0
    rows = list(csv.DictReader(io.StringIO(body)))
    assert len(rows) == 9
    assert float(rows[-1]["p_s1_n1"]) == pytest.approx(1.0, abs=0.03)
    assert float(rows[4]["p_s1_n1"]) == pytest.approx(0.5, abs=0.05)


def test_evolve_json_format(config_file, capsys):
    code, out, _ = run_cli(
        capsys, "evolve", config_file(n_ions=2), "--rabi-hz", "100",
        "--sideband", "carrier", "--duration-s", "1e-4", "--n-max", "4",
        "--time-samples", "5", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["detuning_rad_per_s"] == 0.0
    assert len(payload["times_s"]) == 5
    assert set(payload["populations"]) == {f"p_s{s}_n{n}" for s in (0, 1) for n in range(5)}


def test_evolve_invalid_mode_is_stage_error(config_file, capsys):
    code, _, err = run_cli(capsys, "evolve", config_file(n_ions=2), "--rabi-hz", "100",
                           "--mode", "9")
    assert code == 1
    assert "stage" in err


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "gradion" in capsys.readouterr().out
