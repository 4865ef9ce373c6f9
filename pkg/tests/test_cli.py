"""Command-line front end: grids, formats, determinism, self checks."""

import json
import math

import jsonschema
import pytest

from postexp import cli


def _schema(name):
    from importlib import resources

    path = resources.files("postexp").joinpath("schemas", name)
    return json.loads(path.read_text())


def _run(capsys, argv):
    rc = cli.main(argv)
    out = capsys.readouterr()
    return rc, out.out, out.err


# ------------------------------------------------------------------- grids

def test_parse_grid_forms():
    assert cli.parse_grid("lin:0:1:3", "g") == [0.0, 0.5, 1.0]
    assert cli.parse_grid("log:1:100:3", "g") == pytest.approx([1.0, 10.0, 100.0])
    assert cli.parse_grid("log:-100:-1:3", "g") == pytest.approx([-100.0, -10.0, -1.0])
    assert cli.parse_grid("0.5,1.5,2.5", "g") == [0.5, 1.5, 2.5]
    assert cli.parse_grid("lin:2:2:1", "g") == [2.0]


def test_parse_grid_errors():
    for bad in ("", "lin:1:2:0", "log:0:1:5", "log:-1:1:5", "3,2,1",
                "1,1,2", "lin:1:2", "lin:a:b:3", "nan,1"):
        with pytest.raises(cli.UsageError):
            cli.parse_grid(bad, "g")


# ----------------------------------------------------------------- density

def test_density_csv_layout(capsys):
    rc, out, _ = _run(capsys, ["density", "--k0i", "-0.5", "--x", "0.5,1.5",
                               "--t-grid", "lin:1:5:3", "--parallelism", "1"])
    assert rc == 0
    lines = out.splitlines()
    assert lines[0] == "x,t,rho_exact,rho_saddle,rho_pole,pole_crossed,R,rho_normalized"
    assert len(lines) == 1 + 6
    # x-major ordering, floats round-trip through repr
    first = lines[1].split(",")
    assert first[0] == "0.5" and first[1] == "1.0"
    for cell in first:
        float(cell)


def test_density_boundary_column_is_nan(capsys):
    # the ratio R is undefined on the emission boundary
    rc, out, _ = _run(capsys, ["density", "--k0i", "-0.3", "--x", "0",
                               "--t-grid", "lin:2:2:1", "--parallelism", "1"])
    assert rc == 0
    row = out.splitlines()[1].split(",")
    assert row[0] == "0.0"
    assert row[6] == "nan"


def test_density_json_schema(capsys):
    rc, out, _ = _run(capsys, ["density", "--k0i", "-0.5", "--x", "0.5",
                               "--t-grid", "lin:1:3:3", "--format", "json",
                               "--parallelism", "1"])
    assert rc == 0
    obj = json.loads(out)
    jsonschema.validate(obj, _schema("table.schema.json"))
    assert obj["command"] == "density"
    assert len(obj["rows"]) == 3


def test_density_rejects_negative_position(capsys):
    rc, _, err = _run(capsys, ["density", "--k0i", "-0.5", "--x", "-1",
                               "--t-grid", "lin:1:3:3"])
    assert rc == 2
    assert "error:" in err


# ---------------------------------------------------- transition / critical

def test_transition_valid_flag_beyond_reach(capsys):
    rc, out, _ = _run(capsys, ["transition", "--k0i", "-0.3", "--x-grid",
                               "13,14", "--parallelism", "1"])
    assert rc == 0
    rows = [line.split(",") for line in out.splitlines()[1:]]
    assert rows[0][4] == "1" and rows[1][4] == "0"
    assert rows[1][1] == "nan"
    assert rows[0][5] == "exact_ratio"


def test_transition_late_time_method(capsys):
    rc, out, _ = _run(capsys, ["transition", "--k0i", "-0.3", "--x-grid", "0.1",
                               "--method", "late_time", "--parallelism", "1"])
    assert rc == 0
    row = out.splitlines()[1].split(",")
    assert row[5] == "late_time"
    assert float(row[1]) == pytest.approx(12.44, abs=0.3)


def test_critical_single_point(capsys):
    rc, out, _ = _run(capsys, ["critical", "--k0i-grid", "lin:-0.5:-0.5:1",
                               "--format", "json", "--parallelism", "1"])
    assert rc == 0
    obj = json.loads(out)
    jsonschema.validate(obj, _schema("table.schema.json"))
    assert obj["columns"][:3] == ["k0I", "x_max", "t_p"]
    (row,) = obj["rows"]
    assert row[1] == pytest.approx(4.183, rel=1e-2)


# ----------------------------------------------------------------- lattice

def test_lattice_rows_and_summary(capsys):
    rc, out, _ = _run(capsys, ["lattice", "--delta", "0.3", "--sites", "1,5",
                               "--t-max", "40", "--t-grid", "lin:0:40:81"])
    assert rc == 0
    lines = out.splitlines()
    data = [l for l in lines if not l.startswith("#")]
    notes = [l for l in lines if l.startswith("#")]
    assert data[0] == "t,n,density"
    assert len(data) == 1 + 2 * 81
    keys = {n.split("=")[0].strip("# ") for n in notes}
    assert {"fitted_gamma", "tail_exponent", "resolved_reading",
            "transition_time_site_5"} <= keys


def test_lattice_summary_values(capsys):
    rc, out, _ = _run(capsys, ["lattice", "--delta", "0.3", "--sites", "5",
                               "--t-max", "60", "--format", "json"])
    assert rc == 0
    obj = json.loads(out)
    s = obj["summary"]
    assert s["resolved_reading"] == "alpha_in_numerator"
    assert s["fitted_gamma"] == pytest.approx(0.1887, rel=5e-2)
    assert s["tail_exponent"] == pytest.approx(-3.0, abs=0.3)
    assert s["transition_time_site_5"] == pytest.approx(67.61, abs=0.1)


def test_lattice_band_edge_summary(capsys):
    rc, out, _ = _run(capsys, ["lattice", "--delta", "1", "--sites", "1",
                               "--t-max", "40", "--format", "json"])
    assert rc == 0
    s = json.loads(out)["summary"]
    assert s["fitted_gamma"] is None
    assert s["resolved_reading"] == "n/a"
    assert s["tail_exponent"] == pytest.approx(-3.0, abs=0.1)


def test_lattice_truncation_guard(capsys):
    rc, _, err = _run(capsys, ["lattice", "--delta", "0.3", "--sites", "5",
                               "--t-max", "100", "--n-sites", "50"])
    assert rc == 2
    assert "need n_sites >= 220" in err


# ---------------------------------------------------------------- scenario

def test_scenario_report_schema(capsys):
    rc, out, _ = _run(capsys, ["scenario", "--config", "rb87.cfg"])
    assert rc == 0
    obj = json.loads(out)
    jsonschema.validate(obj, _schema("scenario_report.schema.json"))
    rep = obj["report"]
    assert rep["t_p_physical_s"] == pytest.approx(0.01253, rel=1e-3)
    assert rep["largest_distance_is_lower_bound"] is True


def test_scenario_distance_override(capsys):
    rc, out, _ = _run(capsys, ["scenario", "--config", "rb87.cfg",
                               "--distance", "2e-4"])
    assert rc == 0
    obj = json.loads(out)
    assert obj["params"]["distance_m"] == pytest.approx(2e-4)
    assert obj["report"]["x_detector"] == pytest.approx(2e-4 / 7.307376718848893e-08, rel=1e-9)


def test_scenario_missing_config(capsys):
    rc, _, err = _run(capsys, ["scenario", "--config", "does-not-exist.cfg"])
    assert rc == 2
    assert "not found" in err


def test_scenario_invalid_config_value(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("mass_kg = -1\nlifetime_s = 4e-4\n"
                   "release_velocity_m_per_s = 0.01\natom_number = 1e6\n"
                   "pixel_size_m = 3e-6\n")
    rc, _, err = _run(capsys, ["scenario", "--config", str(cfg)])
    assert rc == 2
    assert "mass" in err


# ------------------------------------------------------------- determinism

def test_output_file_matches_stdout(capsys, tmp_path):
    argv = ["density", "--k0i", "-0.3", "--x", "0.5,2.0",
            "--t-grid", "log:0.5:20:25", "--parallelism", "1"]
    rc, out, _ = _run(capsys, argv)
    assert rc == 0
    path = tmp_path / "d.csv"
    rc2 = cli.main(argv + ["--out", str(path)])
    capsys.readouterr()
    assert rc2 == 0
    assert path.read_text() == out


def test_byte_determinism_across_parallelism(tmp_path, capsys):
    base = ["transition", "--k0i", "-0.3", "--x-grid", "log:0.5:12:16"]
    outputs = []
    for i, par in enumerate(("1", "3", "1")):
        path = tmp_path / f"run{i}.csv"
        rc = cli.main(base + ["--parallelism", par, "--out", str(path)])
        capsys.readouterr()
        assert rc == 0
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]


def test_unwritable_output_path(capsys, tmp_path):
    rc, _, err = _run(capsys, ["critical", "--k0i-grid", "-0.5",
                               "--parallelism", "1",
                               "--out", str(tmp_path / "nodir" / "x.csv")])
    assert rc == 1


# ---------------------------------------------------------------- selftest

def test_selftest_passes(capsys):
    rc, out, _ = _run(capsys, ["selftest"])
    assert rc == 0
    lines = out.strip().splitlines()
    assert len(lines) == 4
    assert all(line.endswith(": PASS") for line in lines)
    names = [line.split(":")[0] for line in lines]
    assert names == ["SELFTEST boundary-identity", "SELFTEST faddeeva-identities",
                     "SELFTEST continuity-residual", "SELFTEST lattice-norm"]


def test_selftest_detects_injected_fault(capsys, monkeypatch):
    # poison the Faddeeva evaluation; the boundary identity must notice
    import postexp.specfun as specfun

    real = specfun.faddeeva
    monkeypatch.setattr(specfun, "faddeeva", lambda z: real(z) * (1.0 + 1e-6))
    rc, out, _ = _run(capsys, ["selftest"])
    assert rc == 1
    assert "SELFTEST boundary-identity: FAIL" in out


def test_bad_k0i_is_usage_error(capsys):
    rc, _, err = _run(capsys, ["density", "--k0i", "-1.5", "--x", "1",
                               "--t-grid", "lin:1:2:2"])
    assert rc == 2
    assert "k0I" in err
