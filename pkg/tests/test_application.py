import csv
import glob
import math
import os

import numpy as np
import pytest

from cqistudio.__main__ import EXIT_CONFIG, EXIT_DOMAIN, EXIT_OK, main
from cqistudio.application import ConfigError, CqiStudioApplication, RunConfig, format_value
from cqistudio.core import UnitMode
from cqistudio.utils.periods import estimate_period

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


@pytest.fixture
def app():
    return CqiStudioApplication()


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


def run(config, out):
    return main(["--config", config, "--out", str(out), "--quiet"])


def write_config(tmp_path, text, name="run.yaml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


@pytest.mark.parametrize(
    "config", sorted(glob.glob(os.path.join(CONFIGS, "*.yaml"))), ids=os.path.basename
)
def test_example_configs(config, tmp_path):
    out = tmp_path / "out.csv"
    assert run(config, out) == EXIT_OK
    rows = read_rows(out)
    assert rows
    assert out.read_bytes().count(b"\r") == 0


@pytest.mark.parametrize(
    "config", sorted(glob.glob(os.path.join(CONFIGS, "failing", "*.yaml"))), ids=os.path.basename
)
def test_failing_configs(config, tmp_path):
    expected = int(os.path.basename(config).split("_")[0].removeprefix("exit"))
    out = tmp_path / "out.csv"
    assert run(config, out) == expected
    assert not out.exists()


def test_exit_codes():
    assert EXIT_OK == 0
    assert EXIT_CONFIG == 2
    assert EXIT_DOMAIN == 3


def test_missing_config(tmp_path):
    assert run(str(tmp_path / "missing.yaml"), tmp_path / "out.csv") == EXIT_CONFIG


def test_invalid_yaml(tmp_path):
    config = write_config(tmp_path, "command: [recoil\n")
    assert run(config, tmp_path / "out.csv") == EXIT_CONFIG


def test_recoil_values(tmp_path):
    out = tmp_path / "recoil.csv"
    assert run(os.path.join(CONFIGS, "recoil_sqi.yaml"), out) == EXIT_OK
    (row,) = read_rows(out)
    assert row["branch"] == "reflect-from-scatterer"
    assert float(row["v1r[natural]"]) == 0
    assert float(row["V2r[natural]"]) == 1
    assert float(row["ratio"]) == pytest.approx(-1 / 3)
    assert float(row["ratio_cross_check"]) == pytest.approx(-1 / 3)


def test_unequal_recoil_columns(tmp_path):
    out = tmp_path / "recoil.csv"
    assert run(os.path.join(CONFIGS, "recoil_unequal.yaml"), out) == EXIT_OK
    (row,) = read_rows(out)
    assert float(row["v1r[natural]"]) == pytest.approx(-3 / 5)
    assert float(row["V3r[natural]"]) == pytest.approx(2 / 5)
    assert float(row["energy_residual"]) < 1e-10


def test_electron_neon_ratio(tmp_path):
    out = tmp_path / "ratio.csv"
    assert run(os.path.join(CONFIGS, "ratio_electron_neon.yaml"), out) == EXIT_OK
    (row,) = read_rows(out)
    assert abs(float(row["ratio"])) == pytest.approx(2.7e-5, rel=0.02)
    assert "k1r[SI]" in row
    assert float(row["photon_ratio"]) > 0


def test_compare_periods(tmp_path):
    out = tmp_path / "compare.csv"
    assert run(os.path.join(CONFIGS, "compare.yaml"), out) == EXIT_OK
    rows = read_rows(out)
    x0 = np.array([float(row["x0[natural]"]) for row in rows])
    sqi = np.array([float(row["pdf_sqi"]) for row in rows])
    cqi = np.array([float(row["pdf_cqi"]) for row in rows])
    period_sqi = float(rows[0]["period_sqi[natural]"])
    period_cqi = float(rows[0]["period_cqi[natural]"])
    assert period_sqi == pytest.approx(2 * math.pi)
    assert period_cqi / period_sqi == pytest.approx(0.75)
    assert estimate_period(x0, sqi) == pytest.approx(period_sqi, rel=1e-5)
    assert estimate_period(x0, cqi) == pytest.approx(period_cqi, rel=1e-5)

    transitions = read_rows(tmp_path / "compare.transitions.csv")
    assert {row["name"] for row in transitions[:3]} == {"overlap-sqi", "overlap-cqi", "momentum"}
    assert len(transitions) == 3 * len(rows)


def test_output_is_deterministic(tmp_path):
    config = os.path.join(CONFIGS, "pdf_coordinate_sqi.yaml")
    first, second = tmp_path / "first.csv", tmp_path / "second.csv"
    assert run(config, first) == EXIT_OK
    assert run(config, second) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_wavegroup_visibility(tmp_path):
    out = tmp_path / "wavegroups.csv"
    assert run(os.path.join(CONFIGS, "pdf_coordinate_wavegroups.yaml"), out) == EXIT_OK
    (row,) = read_rows(out)
    assert float(row["visibility"]) == pytest.approx(0.5, abs=1e-6)
    assert float(row["pdf_sqi"]) == pytest.approx(0.75, abs=1e-6)


def test_marginals(tmp_path):
    out = tmp_path / "marginal.csv"
    assert run(os.path.join(CONFIGS, "marginal_coordinate.yaml"), out) == EXIT_OK
    rows = read_rows(out)
    np.testing.assert_allclose([float(row["marginal_sqi"]) for row in rows], 0.5, atol=1e-9)
    x0 = np.array([float(row["x0[natural]"]) for row in rows])
    cqi = np.array([float(row["marginal_cqi"]) for row in rows])
    np.testing.assert_allclose(cqi, np.cos(2 * x0 / 3) ** 2, atol=1e-12)
    assert all(row["converged_sqi"] == "true" for row in rows)

    out = tmp_path / "momentum.csv"
    assert run(os.path.join(CONFIGS, "marginal_momentum.yaml"), out) == EXIT_OK
    rows = read_rows(out)
    for row in rows:
        assert float(row["visibility_sqi"]) == pytest.approx(
            float(row["visibility_closed_form"]), abs=1e-6
        )
        assert float(row["visibility_cqi"]) == pytest.approx(1.0, abs=1e-9)
    sqi = [float(row["visibility_sqi"]) for row in rows]
    assert np.all(np.diff(sqi) < 0)
    assert sqi[0] > 0.99
    assert sqi[-1] < 1e-6


def test_oracle_companion(tmp_path):
    out = tmp_path / "oracle.csv"
    assert run(os.path.join(CONFIGS, "oracle.yaml"), out) == EXIT_OK
    assert len(read_rows(out)) == 1024
    (periods,) = read_rows(tmp_path / "oracle.periods.csv")
    assert periods["weak"] == "true"
    assert abs(float(periods["relative_difference"])) < 0.02


def test_oracle_is_not_sweepable(tmp_path):
    config = write_config(
        tmp_path,
        "command: oracle\nm: 1\nv: 1\nM: 1\nV: 0\ng: 0.02\n"
        "sweep: {parameter: x0, start: 10, stop: 20, count: 3}\n",
    )
    assert run(config, tmp_path / "out.csv") == EXIT_CONFIG


def test_transitions_default_to_si(app):
    config = app.load_config({"command": "transitions", "kind": "momentum", "L_c": 1})
    assert config.units is UnitMode.SI
    natural = CqiStudioApplication(units="natural").load_config(
        {"command": "transitions", "kind": "momentum", "L_c": 1}
    )
    assert natural.units is UnitMode.Natural


def test_load_config_errors(app):
    with pytest.raises(ConfigError):
        app.load_config(["command", "recoil"])
    with pytest.raises(ConfigError, match="'command'"):
        app.load_config({"command": "plot"})
    with pytest.raises(ConfigError, match="missing required key 'V'"):
        app.load_config({"command": "recoil", "m": 1, "v": 1, "M": 1})
    with pytest.raises(ConfigError, match="must be a number"):
        app.load_config({"command": "recoil", "m": "heavy", "v": 1, "M": 1, "V": 0})
    with pytest.raises(ConfigError, match="cannot sweep"):
        app.load_config(
            {
                "command": "recoil",
                "m": 1,
                "v": 1,
                "M": 1,
                "V": 0,
                "sweep": {"parameter": "model", "start": 0, "stop": 1, "count": 2},
            }
        )
    with pytest.raises(ConfigError, match="log sweeps"):
        app.load_config(
            {
                "command": "recoil",
                "m": 1,
                "v": 1,
                "M": 1,
                "sweep": {"parameter": "V", "start": 0, "stop": 1, "count": 2, "scale": "log"},
            }
        )


def test_swept_parameter_may_be_omitted(app):
    config = app.load_config(
        {
            "command": "recoil",
            "m": 1,
            "v": 1,
            "M": 1,
            "sweep": {"parameter": "V", "start": 0, "stop": 0.5, "count": 3},
        }
    )
    assert "V" not in config.parameters
    assert config.parameters["m"] == 1.0
    assert config.sweep.values() == pytest.approx([0, 0.25, 0.5])


def test_numeric_strings(app):
    config = app.load_config({"command": "recoil", "m": "1e-3", "v": 1, "M": 1, "V": 0})
    assert config.parameters["m"] == 1e-3


def test_run_without_output(app):
    config = RunConfig("recoil", {"m": 1.0, "v": 1.0, "M": 1.0, "V": 0.0})
    with pytest.raises(ConfigError):
        app.run(config)


def test_bad_probe(tmp_path):
    config = write_config(
        tmp_path,
        "command: transitions\nkind: slab\nprobe: electron\nD: 1.0e-2\nM: 1.0e-3\n"
        "m_atom: 3.35e-26\nn_g: 1.5\nT: 300\nnu: 6.0e+14\n",
    )
    assert run(config, tmp_path / "out.csv") == EXIT_CONFIG


def test_domain_error_in_sweep_writes_nothing(tmp_path):
    config = write_config(
        tmp_path,
        "command: pdf-coordinate\nm: 1\nv: 1\nM: 1\nV: 0\n"
        "sweep: {parameter: x0, start: -1, stop: 1, count: 3}\n",
    )
    out = tmp_path / "out.csv"
    assert run(config, out) == EXIT_DOMAIN
    assert not out.exists()


def test_format_value():
    assert format_value(0.1) == "0.10000000000000001"
    assert format_value(True) == "true"
    assert format_value(None) == ""
    assert format_value("SQI") == "SQI"
    assert format_value(np.float64(2.0)) == "2"
