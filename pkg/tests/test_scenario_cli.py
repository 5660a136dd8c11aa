import json

import numpy as np
import pytest

from dwkpilot import cli
from dwkpilot import scenario as sc


def _write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(data if isinstance(data, str) else json.dumps(data))
    return p


def test_minimal_config_uses_standard_defaults(tmp_path):
    cfg = sc.parse_scenario(_write(tmp_path, {"kind": "quantum"}))
    assert cfg.omega == 1.0 and cfg.lam == 0.1 and cfg.q0 == 1.0 and cfg.seed == 42
    assert cfg.samples == 100_000
    assert cfg.grid == sc.Grid(-8.0, 8.0, 0.01, 2 * np.pi, 1e-3)
    assert cfg.grid.q().size == 1601 and cfg.grid.sigma().size == 6284


def test_nested_grid_and_lambda_key(tmp_path):
    cfg = sc.parse_scenario(_write(tmp_path, {"kind": "classical", "lambda": 0.2, "grid": {"dq": 0.02}}))
    assert cfg.lam == 0.2 and cfg.grid.dq == 0.02 and cfg.grid.q_max == 8.0


@pytest.mark.parametrize("data, code", [
    ({"kind": "quantum", "omga": 1.0}, 2),
    ("{not json", 2),
    ({"kind": "quantum", "grid": {"dq": 0.0}}, 3),
    ({"kind": "quantum", "omega": -1.0}, 3),
    ({"kind": "quantum", "grid": {"qq": 1}}, 2),
    ({"kind": "quantum", "n_vector": [1, 1, 0, 0]}, 3),
    ({"kind": "quantum", "samples": 1.5}, 2),
    ({"kind": "quantum", "omega": float("nan")}, 3),
])
def test_config_errors_map_to_exit_codes(tmp_path, data, code):
    p = _write(tmp_path, data)
    assert cli.main(["quantum", "--config", str(p), "--out", str(tmp_path / "o")]) == code


def test_kind_mismatch_is_range_error(tmp_path):
    p = _write(tmp_path, {"kind": "quantum"})
    with pytest.raises(sc.ConfigRangeError):
        sc.parse_scenario(p, kind="riesz")


def test_csv_format(tmp_path):
    path = sc.write_csv(sc.Table(("a", "b"), [(0.1, 3), (float("nan"), -2.5e-300)]), tmp_path / "t.csv")
    raw = path.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "a,b"
    assert lines[1] == "0.10000000000000001,3"
    assert float(lines[1].split(",")[0]) == 0.1
    empty = sc.write_csv(sc.Table(("x",), []), tmp_path / "e.csv")
    assert empty.read_text() == "x\n"


def test_report_roundtrip(tmp_path):
    rep = sc.RunReport("demo", "quantum", 1.0, [sc.Check.at_most("c", 2.0, 1.0)], [])
    data = json.loads(sc.write_report(rep, tmp_path / "r.json").read_text())
    assert data["passed"] is False and data["checks"][0]["passed"] is False


def test_failing_check_exits_1(tmp_path, monkeypatch):
    monkeypatch.setitem(sc.PIPELINES, "invariants",
                        lambda cfg: ([sc.Check.at_most("bad", 1.0, 0.0)], {}))
    p = _write(tmp_path, {})
    assert cli.main(["invariants", "--config", str(p), "--out", str(tmp_path)]) == 1


def test_runtime_error_exits_4(tmp_path):
    p = _write(tmp_path, {"sigma_window": 2.0})
    assert cli.main(["classical", "--config", str(p), "--out", str(tmp_path)]) == 4


def test_classical_cli_run(tmp_path, capsys):
    p = _write(tmp_path, {"name": "osc", "B0": 0.3})
    assert cli.main(["classical", "--config", str(p), "--out", str(tmp_path / "o")]) == 0
    rows = (tmp_path / "o" / "trajectory.csv").read_text().splitlines()
    assert rows[0] == "sigma,q" and len(rows) == 1002
    rep = json.loads((tmp_path / "o" / "report.json").read_text())
    assert rep["scenario"] == "osc" and all(c["passed"] for c in rep["checks"])
    assert "PASS" in capsys.readouterr().out


def test_limit_sweep_table(tmp_path):
    cfg = sc.ScenarioConfig(kind="limit-sweep", sigma_window=0.5, grid=sc.Grid(-7, 8, 0.02, 1.0, 2e-3))
    rep = sc.run_scenario(cfg, tmp_path)
    rows = (tmp_path / "limit_sweep.csv").read_text().splitlines()
    assert rows[0] == "lambda,g_std,g_std_predicted,f_gap_sup" and len(rows) == 5
    gaps = [float(r.split(",")[3]) for r in rows[1:]]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert rep.passed


def test_quantum_rows_are_output_grid_product(tmp_path):
    cfg = sc.ScenarioConfig(kind="quantum", grid=sc.Grid(-4, 4, 0.02, 1.0, 2e-3), csv_sigma_stride=50,
                            csv_q_stride=10)
    sc.run_scenario(cfg, tmp_path)
    rows = (tmp_path / "profile.csv").read_text().splitlines()
    n_sigma = len(range(0, 51, 5))  # stored every 10th slice, written every 5th of those
    assert rows[0] == "sigma,q,f,g,res_hj,res_cont"
    assert len(rows) - 1 == n_sigma * 41
