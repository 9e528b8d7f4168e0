import json
import subprocess
import sys

import numpy as np
import pytest

from qmeter.cli import main, presets
from qmeter.cli.config import ConfigError, config_hash, normalize, validate
from qmeter.cli.modes import classify, run
from qmeter.cli.table import ResultTable, read_csv
from qmeter.errors import NumericalError
from qmeter.hamiltonian import Exchange, Hyperfine, Zeeman, build
from qmeter.spinops import SpinSystem

FAST_PRESETS = ["singlet-yield-parallel", "fig1a-linearity", "fig1b-transient", "scenario-magnetoreception"]


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def run_cli(*argv):
    return main([str(a) for a in argv])


@pytest.mark.parametrize("name", FAST_PRESETS)
def test_presets_run_and_are_byte_identical(tmp_path, name):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli("--preset", name, "--out", a, "--jobs", 1) == 0
    assert run_cli("--preset", name, "--out", b, "--jobs", 1) == 0
    assert a.read_bytes() == b.read_bytes()


def test_every_preset_validates():
    for name, cfg in presets.PRESETS.items():
        normalize(cfg)


def test_worker_pool_preserves_order_and_bytes(tmp_path):
    cfg = presets.get("orientation-sweep")
    cfg["sweep"]["theta_deg"] = [90, 0, 45]
    path = write(tmp_path, "c.json", cfg)
    one, two = tmp_path / "1.csv", tmp_path / "2.csv"
    assert run_cli("--config", path, "--out", one, "--jobs", 1) == 0
    assert run_cli("--config", path, "--out", two, "--jobs", 2) == 0
    assert one.read_bytes() == two.read_bytes()
    assert read_csv(one.read_text()).column("theta_deg") == [90.0, 0.0, 45.0]


def test_table_layout_and_footer(tmp_path):
    out = tmp_path / "t.csv"
    assert run_cli("--preset", "singlet-yield-parallel", "--out", out) == 0
    text = out.read_text()
    lines = text.splitlines()
    assert lines[0].split(",")[:2] == ["yield_ground", "yield_prot_S"]
    assert lines[1].split(",")[0] == "1"
    table = read_csv(text)
    assert len(table.rows) == 1 and len(table.rows[0]) == len(table.columns)
    for key in ("config_sha256", "gamma_e_rad_per_s_T", "dt_s", "trace_floor"):
        assert key in table.provenance
    assert float(table.provenance["gamma_e_rad_per_s_T"]) == 1.760859630e11
    assert table.column("singlet_fraction")[0] == pytest.approx(0.5, abs=0.01)
    assert table.column("dt_s")[0] > 0


def test_json_format(tmp_path):
    out = tmp_path / "t.json"
    assert run_cli("--preset", "fig1a-linearity", "--format", "json", "--out", out) == 0
    body = json.loads(out.read_text())
    assert body["columns"][:3] == ["n_bar", "rho_1", "rho_2"]
    assert len(body["rows"]) == 10
    assert "config_sha256" in body["provenance"]


def test_echo_round_trip(tmp_path, capsys):
    assert run_cli("--preset", "coherence-sweep", "--dt", 1e-11, "--echo-config") == 0
    echoed = capsys.readouterr().out
    cfg = json.loads(echoed)
    assert cfg["numerics"]["dt_s"] == 1e-11
    again = normalize(json.loads(echoed))
    assert config_hash(again) == config_hash(cfg)
    path = write(tmp_path, "echo.json", cfg)
    assert run_cli("--config", path, "--echo-config") == 0
    assert capsys.readouterr().out == echoed


def test_echoed_config_reproduces_table(tmp_path, capsys):
    assert run_cli("--preset", "fig1b-transient", "--echo-config") == 0
    path = write(tmp_path, "e.json", json.loads(capsys.readouterr().out))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_cli("--preset", "fig1b-transient", "--out", a)
    run_cli("--config", path, "--out", b)
    assert a.read_bytes() == b.read_bytes()


def test_output_path_does_not_change_hash():
    cfg = normalize(presets.get("fig1a-linearity"))
    other = dict(cfg, output={"path": "/tmp/x.csv", "format": "json"})
    assert config_hash(cfg) == config_hash(other)
    changed = json.loads(json.dumps(cfg))
    changed["sweep"]["n_bar"][0] = 2e-6
    assert config_hash(changed) != config_hash(cfg)


def test_empty_grid_exit_2_names_field(tmp_path, capsys):
    cfg = presets.get("coherence-sweep")
    cfg["sweep"]["tau_c_s"] = []
    assert run_cli("--config", write(tmp_path, "c.json", cfg)) == 2
    assert "sweep.tau_c_s" in capsys.readouterr().err


@pytest.mark.parametrize("mutate, field", [
    (lambda c: c.pop("hamiltonian"), "hamiltonian"),
    (lambda c: c["hamiltonian"]["terms"][0].update(unit="T"), "unit"),
    (lambda c: c.update(schema_version=2), "schema_version"),
    (lambda c: c["open_system"].update(k_prot_per_s=-1), "k_prot_per_s"),
    (lambda c: c["open_system"].update(channel="amplitude"), "channel"),
    (lambda c: c.update(extra=1), "extra"),
])
def test_schema_violations_exit_2(tmp_path, capsys, mutate, field):
    cfg = presets.get("singlet-yield-parallel")
    mutate(cfg)
    assert run_cli("--config", write(tmp_path, "c.json", cfg)) == 2
    assert field in capsys.readouterr().err


def test_semantic_error_exit_2(tmp_path, capsys):
    cfg = presets.get("singlet-yield-parallel")
    cfg["hamiltonian"]["terms"][0]["nucleus"] = "T"
    assert run_cli("--config", write(tmp_path, "c.json", cfg)) == 2
    assert "nucleus" in capsys.readouterr().err


def test_oversized_step_exit_2(capsys):
    assert run_cli("--preset", "singlet-yield-parallel", "--dt", 1e-8) == 2
    assert "stability bound" in capsys.readouterr().err


def test_not_json_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text("{mode:")
    assert run_cli("--config", p) == 2
    assert "not valid JSON" in capsys.readouterr().err


def test_numerical_failure_exit_3(monkeypatch, capsys):
    import qmeter.dynamics as dyn

    def boom(*args, **kwargs):
        raise NumericalError("density matrix eigenvalue -1e-3 below -1e-08 at t=1e-06 s")

    monkeypatch.setattr(dyn, "compute_yields", boom)
    assert run_cli("--preset", "singlet-yield-parallel") == 3
    assert "numerical failure" in capsys.readouterr().err


def test_mode_override_and_missing_source(capsys):
    assert run_cli("--preset", "singlet-yield-parallel", "--mode", "sweep-coherence") == 2
    assert "field" in capsys.readouterr().err
    assert run_cli() == 2


def test_pump_steady_table_matches_library():
    from qmeter.pumping import light_harvesting_scheme, steady_state
    table = run(normalize(presets.get("fig1a-linearity")), jobs=1)
    for n, r2 in zip(table.column("n_bar"), table.column("rho_2")):
        assert r2 == steady_state(light_harvesting_scheme(n))["2"]


def test_scheme_overrides(tmp_path):
    cfg = presets.get("fig1b-transient")
    cfg["scheme"] = {"preset": "fig1b-rhodopsin", "branching": {"level": "2", "to": "t", "fraction": 0.65}}
    cfg["sweep"]["t_s"] = [1e-9]
    table = run(normalize(cfg), jobs=1)
    assert table.column("rho_X")[0] == pytest.approx(0.65 * 1.25e13 / (1.25e13 + 5e10), rel=1e-9)
    cfg["scheme"] = {"preset": "fig1b-rhodopsin", "rate_overrides": [{"from": "t", "to": "X", "rate_per_s": 1.0}]}
    assert run(normalize(cfg), jobs=1).column("rho_t")[0] > 0.99


def test_full_scheme_in_config():
    cfg = {"schema_version": 1, "mode": "pump-steady",
           "scheme": {"levels": ["g", "e"], "edges": [{"from": "e", "to": "g", "rate_per_s": 1e9}],
                      "pump": {"from": "g", "to": "e", "base_rate_per_s": 1e9}},
           "sweep": {"n_bar": [0.0, 1.0]}}
    table = run(normalize(cfg), jobs=1)
    assert table.column("rho_e") == [0.0, 0.5]


def test_classify_examples():
    sys_ = SpinSystem.radical_pair()
    H0 = build([Exchange(1000)], sys_)
    H_ex = build([Hyperfine((0, 0, 1000))], sys_)
    H_int = build([Zeeman((50, 0, 0))], sys_)
    rep = classify(H0, H_ex, H_int, tau_c=1e-7)
    assert rep.scenario == "ii" and rep.coherence_satisfied
    assert rep.comm_h0_hint <= 1e-9 * np.linalg.norm(H0, 2) * np.linalg.norm(H_int, 2)
    assert rep.comm_hex_hint > 0
    same = classify(H_ex, H_ex, H_int)
    assert any("cannot acquire information" in w for w in same.warnings)
    none = classify(H0, H_ex, np.zeros((8, 8)))
    assert none.scenario == "i"
    direct = classify(H_ex, H0, H_int)  # field couples to the ground-state meter
    assert direct.scenario == "i"
    assert "scenario: (ii)" in rep.text()


def test_classify_scenario_cli(capsys):
    assert run_cli("--preset", "scenario-magnetoreception") == 0
    captured = capsys.readouterr()
    assert "scenario: (ii)" in captured.err
    assert "# scenario=ii" in captured.out


def test_result_table_rejects_ragged_rows():
    t = ResultTable(["a", "b"], ["1", "s"])
    with pytest.raises(ValueError):
        t.add_row([1.0])
    with pytest.raises(ValueError):
        ResultTable(["a"], [])


def test_validate_raises_config_error():
    with pytest.raises(ConfigError, match=r"\$"):
        validate({"mode": "radical-pair"})


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "qmeter", "--list-presets"], capture_output=True, text=True,
                         check=True).stdout
    assert "coherence-sweep" in out
