import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from strata_wave.cli import lemma_table, main
from strata_wave.config import DEFAULTS, apply_overrides, load_config, validate, with_defaults
from strata_wave.errors import ChecksumError, ConfigError
from strata_wave.persistence import config_hash, load_field, read_json, save_field, write_csv
from strata_wave.strip_problem import HeightField, StripGrid

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
GOLDEN = Path(__file__).with_name("data") / "laminar_golden.csv"


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def _base(**params):
    p = {"g": 1.0, "sigma": 0.0, "d": 1.0, "p0": -1.0,
         "rho": {"kind": "constant", "coeffs": [1.0]},
         "beta": {"kind": "constant", "coeffs": [0.0]}}
    p.update(params)
    return {"params": p, "grid": {"n_q": 8, "n_p": 16}, "solver": {"kappa0": 1.0}}


def _read_csv(path):
    with open(path) as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    return rows[0], [[float(x) for x in r] for r in rows[1:]]


# -- config ---------------------------------------------------------------------------

def test_shipped_configs_validate():
    for path in CONFIGS.glob("*.json"):
        cfg = load_config(path)
        assert cfg["grid"]["n_q"] % 2 == 0


def test_unknown_key_rejected(tmp_path):
    cfg = _base()
    cfg["params"]["colour"] = 1
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, cfg))
    assert main(["laminar", "--config", str(_write(tmp_path, cfg))]) == 2


def test_overrides_and_defaults():
    cfg = apply_overrides(_base(), ["solver.tol=1e-9", "grid.n_q=16", "diagnostics.mu=0.25"])
    cfg = with_defaults(validate(cfg))
    assert cfg["solver"]["tol"] == 1e-9 and cfg["grid"]["n_q"] == 16
    assert cfg["diagnostics"]["m_max"] == DEFAULTS["diagnostics"]["m_max"]
    assert cfg["diagnostics"]["mu"] == 0.25
    with pytest.raises(ConfigError):
        apply_overrides(_base(), ["solver.tol"])


def test_missing_or_broken_config(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["lemmas", "--config", str(bad)]) == 2


# -- persistence ---------------------------------------------------------------------

def test_field_round_trip_and_corruption(tmp_path):
    grid = StripGrid(8, 5, 3.0, -0.5)
    h = HeightField.from_function(grid, lambda q, p: np.sin(q) + p)
    path = save_field(tmp_path / "h.field", h, {"Q": 1.5})
    back, meta = load_field(path)
    assert back.grid == grid and meta == {"Q": 1.5}
    np.testing.assert_array_equal(back.values, h.values)
    raw = bytearray(path.read_bytes())
    raw[-3] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(ChecksumError):
        load_field(path)
    (tmp_path / "junk.field").write_bytes(b"garbage")
    with pytest.raises(ChecksumError):
        load_field(tmp_path / "junk.field")


def test_config_hash_ignores_output_dir():
    a = with_defaults(_base())
    b = dict(a, output_dir="elsewhere")
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(apply_overrides(a, ["grid.n_q=16"]))


def test_csv_writer_keeps_full_precision(tmp_path):
    write_csv(tmp_path / "t.csv", ["x"], [[1 / 3]], comment="hello")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "# hello" and float(lines[2]) == 1 / 3


# -- commands -------------------------------------------------------------------------

def test_laminar_uniform(tmp_path):
    out = tmp_path / "lam"
    assert main(["laminar", "--config", str(CONFIGS / "laminar_uniform.json"), "--out", str(out)]) == 0
    summary = read_json(out / "laminar_summary.json")
    assert summary["Q"] == pytest.approx(-2 * 1.0 * -1.0 * 1.0 + 1.0, rel=1e-15)
    header, rows = _read_csv(out / "laminar_profile.csv")
    assert header == ["p", "H", "dH"]
    np.testing.assert_allclose([r[1] for r in rows], [r[0] + 1 for r in rows], atol=1e-14)


def test_negative_depth_exit_code(tmp_path):
    assert main(["laminar", "--config", str(_write(tmp_path, _base(d=-1.0)))]) == 2


def test_stratified_laminar_matches_golden(tmp_path):
    cfg = _base(g=9.81, d=0.5, rho={"kind": "polynomial", "coeffs": [1.0, -0.1]},
                beta={"kind": "constant", "coeffs": [0.3]})
    cfg["solver"]["kappa0"] = 0.5
    cfg["output_dir"] = str(tmp_path / "strat")
    assert main(["laminar", "--config", str(_write(tmp_path, cfg))]) == 0
    _, got = _read_csv(tmp_path / "strat" / "laminar_profile.csv")
    _, ref = _read_csv(GOLDEN)
    np.testing.assert_allclose(np.array(got), np.array(ref), atol=1e-10)


def test_continue_to_zero_is_laminar(tmp_path):
    cfg = _base()
    cfg["solver"] = {"amplitude_targets": [0.0], "kappa0": 1.0, "find_bifurcation": False}
    cfg["output_dir"] = str(tmp_path / "c")
    assert main(["continue", "--config", str(_write(tmp_path, cfg))]) == 0
    summary = read_json(tmp_path / "c" / "branch_summary.json")
    assert summary["length"] == 1 and summary["branch"][0]["amplitude"] == 0.0
    h, meta = load_field(tmp_path / "c" / "branch_000.field")
    np.testing.assert_allclose(h.values, np.broadcast_to(h.grid.p + 1.0, h.grid.shape), atol=1e-14)


def _wave_config(tmp_path, name):
    cfg = json.loads((CONFIGS / "stratified.json").read_text())
    cfg["grid"] = {"n_q": 64, "n_p": 16}
    cfg["solver"]["amplitude_targets"] = [1e-2]
    cfg["diagnostics"] = {"m_max": 6, "order_budget": 4}
    cfg["output_dir"] = str(tmp_path / name)
    return _write(tmp_path, cfg, name + ".json")


def test_solve_deterministic_and_analyze(tmp_path):
    a, b = _wave_config(tmp_path, "a"), _wave_config(tmp_path, "b")
    assert main(["solve", "--config", str(a)]) == 0
    assert main(["solve", "--config", str(b)]) == 0
    sa = (tmp_path / "a" / "summary.csv").read_text()
    assert sa == (tmp_path / "b" / "summary.csv").read_text()
    _, rows = _read_csv(tmp_path / "a" / "summary.csv")
    assert rows[0][0] == pytest.approx(1e-2) and rows[0][2] <= 1e-10

    state = tmp_path / "a" / "state.field"
    assert main(["analyze", "--config", str(a), "--state", str(state)]) == 0
    report = read_json(tmp_path / "a" / "report.json")
    rates = [r[1] for r in report["report"]["per_p_decay"]]
    assert rates and min(rates) > 0
    assert all(r[2] <= 0.01 for r in report["report"]["per_p_decay"])
    assert report["derivative_equation"]["1"]["interior"] < 1e-8
    assert list((tmp_path / "a").glob("decay_p*.csv"))


def test_analyze_needs_state(tmp_path):
    assert main(["analyze", "--config", str(_wave_config(tmp_path, "x"))]) == 2


def test_analyze_corrupted_state(tmp_path):
    bad = tmp_path / "bad.field"
    bad.write_bytes(b'{"format": "strata-wave-field"}\n\x00\x01')
    cfg = _wave_config(tmp_path, "y")
    assert main(["analyze", "--config", str(cfg), "--state", str(bad)]) == 6


def test_laminar_analyze_degenerate(tmp_path):
    out = tmp_path / "lam"
    cfg = _base()
    cfg["grid"] = {"n_q": 64, "n_p": 12}
    cfg["diagnostics"] = {"m_max": 8, "order_budget": 4}
    cfg["output_dir"] = str(out)
    path = _write(tmp_path, cfg)
    assert main(["laminar", "--config", str(path)]) == 0
    assert main(["analyze", "--config", str(path), "--state", str(out / "laminar.field")]) == 0
    rep = read_json(out / "report.json")["report"]
    assert rep["per_p_decay"] == [] and max(rep["em_ratios"]) == 0.0


def test_lemma_tables(tmp_path):
    rows = lemma_table({"lemma_sums": {"max_order": 2}})
    assert len(rows) == 3 and all(r["ok"] for r in rows)
    assert lemma_table({}) == []
    cfg = _base()
    cfg["lemmas"] = {}
    cfg["output_dir"] = str(tmp_path / "l")
    assert main(["lemmas", "--config", str(_write(tmp_path, cfg))]) == 0
    res = read_json(tmp_path / "l" / "lemmas.json")
    assert res["rows"] == [] and res["all_ok"] is True


def test_default_lemma_sweep(tmp_path):
    cfg = _base()
    cfg["output_dir"] = str(tmp_path / "d")
    assert main(["lemmas", "--config", str(_write(tmp_path, cfg))]) == 0
    res = read_json(tmp_path / "d" / "lemmas.json")
    assert res["all_ok"] and len(res["rows"]) > 2000
    assert all(math.isfinite(r["worst_margin"]) for r in res["rows"])
