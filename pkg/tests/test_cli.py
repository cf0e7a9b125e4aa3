import json

import numpy as np
import pytest

from defectchain import __version__
from defectchain.cli import (EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, format_csv, format_json,
                             load_config, main, parse_csv)


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = main([*map(str, args), "--out", str(out)])
    return code, out


def test_boundstates_json(tmp_path):
    code, out = run(tmp_path, "--experiment", "boundstates", "--alpha1", 2, "--alpha2", 2,
                    "--l1", 0, "--l2", 1, name="bs.json")
    assert code == EXIT_OK
    data = json.loads(out.read_text())
    assert set(data) == {"omega0", "l1", "l2", "alpha1", "alpha2", "states"}
    (state,) = data["states"]
    assert set(state) == {"energy", "x_loc", "xi", "k1", "k2", "parity"}
    assert state["x_loc"] == pytest.approx(-5 / 3, abs=1e-12)
    manifest = json.loads((tmp_path / "bs.json.manifest.json").read_text())
    assert manifest["version"] == __version__
    assert manifest["config"]["alpha1"] == 2.0


def test_rabi_with_one_level_exits_3(tmp_path, capsys):
    code, _ = run(tmp_path, "--experiment", "rabi", "--alpha1", 2, "--alpha2", 2, "--l1", 0,
                  "--l2", 1)
    assert code == EXIT_NUMERIC
    assert "Rabi transfer unavailable" in capsys.readouterr().err


def test_tiny_quadrature_exits_3(tmp_path):
    with pytest.warns(Warning):
        code, _ = run(tmp_path, "--experiment", "rabi", "--l2", 5, "--quad-nodes", 64,
                      "--tmax", 40)
    assert code == EXIT_NUMERIC


@pytest.mark.parametrize("args", [["--experiment", "nope"], ["--experiment", "statics",
                                  "--method", "oracle"], ["--l1", 3, "--l2", 3],
                                  ["--omega0", 0.5], ["--quad-nodes", 7]])
def test_configuration_errors_exit_2(tmp_path, args):
    code, _ = run(tmp_path, *args)
    assert code == EXIT_CONFIG


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# trap run\nexperiment = trap\nalpha1 = 3\nalpha2=3\nl1=-1\nl2 = 1\n"
                   "quad-nodes = 1024\n")
    conf = load_config(["--config", str(cfg), "--alpha1", "2"])
    assert conf.experiment == "trap" and conf.alpha1 == 2.0 and conf.alpha2 == 3.0
    assert conf.quad_nodes == 1024 and conf.sender == 0 and conf.receiver == 0
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    assert main(["--config", str(bad)]) == EXIT_CONFIG


def test_compare_free_chain(tmp_path, capsys):
    code, out = run(tmp_path, "--experiment", "rabi", "--alpha1", 0, "--alpha2", 0, "--l2", 5,
                    name="free.csv")
    # no levels at all: the Rabi protocol is unavailable
    assert code == EXIT_NUMERIC
    code, out = run(tmp_path, "--experiment", "bounce", "--alpha1", 0, "--alpha2", 0, "--l2", 4,
                    "--window", 3, "--tmax", 30, "--method", "both", name="free.csv")
    assert code == EXIT_OK
    manifest = json.loads((tmp_path / "free.csv.manifest.json").read_text())
    assert manifest["summary"]["max_deviation"] < 1e-6
    assert manifest["nodes"]["n_sites"] % 2 == 1


def test_compare_standard_point(tmp_path, capsys):
    code, out = run(tmp_path, "--experiment", "rabi", "--alpha1", 1.5, "--alpha2", 1.5,
                    "--l2", 5, "--tmax", 100, "--method", "both", name="rabi.csv")
    assert code == EXIT_OK
    assert "max |C_analytic - C_oracle|" in capsys.readouterr().out
    manifest = json.loads((tmp_path / "rabi.csv.manifest.json").read_text())
    assert manifest["summary"]["max_deviation"] < 1e-3
    header, rows = parse_csv(out.read_text())
    assert header == ("t", "site", "concurrence")
    assert {r[1] for r in rows} == {0, 5}


def test_map_is_site_major(tmp_path):
    code, out = run(tmp_path, "--experiment", "bounce", "--l1", 0, "--l2", 6, "--window", 2,
                    "--tmax", 2, "--dt", 0.5, name="map.csv")
    assert code == EXIT_OK
    header, rows = parse_csv(out.read_text())
    assert header == ("t", "site", "concurrence")
    sites = [r[1] for r in rows]
    assert sites == sorted(sites)
    assert len(rows) == 5 * 11
    first = [r for r in rows if r[1] == 3]
    assert first[0][2] == pytest.approx(1.0, abs=1e-6)


def test_statics_profiles_show_remote_control(tmp_path):
    code, a = run(tmp_path, "--experiment", "statics", "--alpha1", 1.5, "--alpha2", 1.5,
                  name="sym.csv")
    assert code == EXIT_OK
    code, b = run(tmp_path, "--experiment", "statics", "--alpha1", 2, "--alpha2", 1.5,
                  name="asym.csv")
    assert code == EXIT_OK
    ha, ra = parse_csv(a.read_text())
    hb, rb = parse_csv(b.read_text())
    assert ha == hb == ("site", "concurrence")
    ca, cb = dict(ra), dict(rb)
    assert 0 not in ca
    assert ca[5] > 2 * cb[5]


@pytest.mark.parametrize("args,name", [
    (["--experiment", "inset", "--alpha1", 2, "--alpha2", 2, "--d-max", 6], "inset.csv"),
    (["--experiment", "sweep", "--alpha1", 4, "--d-max", 6], "sweep.json"),
    (["--experiment", "trap", "--l1", -1, "--l2", 1, "--alpha1", 2, "--alpha2", 2,
      "--tmax", 10, "--dt", 0.05], "trap.csv"),
    (["--experiment", "boundstates", "--alpha1", 3, "--alpha2", 3, "--l2", 1], "bs.json"),
])
def test_outputs_byte_stable_and_round_trip(tmp_path, args, name):
    code, out = run(tmp_path, *args, name=name)
    assert code == EXIT_OK
    first = out.read_bytes()
    manifest = (tmp_path / f"{name}.manifest.json").read_bytes()
    code, out = run(tmp_path, *args, name=name)
    assert out.read_bytes() == first
    assert (tmp_path / f"{name}.manifest.json").read_bytes() == manifest
    text = first.decode()
    if name.endswith(".csv"):
        assert format_csv(*parse_csv(text)) == text
    else:
        assert format_json(json.loads(text)) == text


def test_sweep_reports_fit(tmp_path):
    code, out = run(tmp_path, "--experiment", "sweep", "--alpha1", 4, "--d-max", 6,
                    name="sweep.json")
    data = json.loads(out.read_text())
    assert data["r2"] > 0.995
    assert data["periods"] == pytest.approx(list(2 * np.pi / np.array(data["gaps"])))


@pytest.mark.slow
def test_adiabatic_summary(tmp_path):
    code, out = run(tmp_path, "--experiment", "adiabatic", "--l1", -2, "--l2", 2, "--tmax", 100,
                    "--dt", 0.5, name="ad.json")
    assert code == EXIT_OK
    data = json.loads(out.read_text())
    assert 0 < data["fidelity"] < 1
    assert data["norm_drift"] < 1e-8
