import copy
import hashlib
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from sparkspread import cli
from sparkspread.cli import main
from sparkspread.config import ConfigError, load_config, parse_config
from sparkspread.simulate import read_binary_paths, read_csv_paths
from sparkspread.validation import SuiteReport

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
GOLDEN = Path(__file__).parent / "golden"


def base():
    return json.loads((CONFIGS / "merton_base.json").read_text())


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def price(tmp_path, cfg, name="cfg.json", extra=()):
    code = main(["price", "--config", str(write(tmp_path, cfg, name)), "--out", str(tmp_path), *extra])
    out = tmp_path / f"{Path(name).stem}.price.json"
    return code, json.loads(out.read_text()) if out.exists() else None


def no_jump(cfg):
    for leg in ("electricity", "gas"):
        cfg["model"][leg]["lambda"] = 0.0
    return cfg


def test_series_without_jumps_matches_kirk(tmp_path):
    cfg = no_jump(base())
    cfg["method"] = {"name": "series", "inner": "kirk"}
    _, series = price(tmp_path, cfg, "a.json")
    cfg["method"] = {"name": "kirk"}
    _, kirk = price(tmp_path, cfg, "b.json")
    assert series["price"] == pytest.approx(kirk["price"], abs=1e-10)


def test_closed_forms_agree_on_base_case(tmp_path):
    cfg = no_jump(base())
    prices = {}
    for name in ("kirk", "quadrature", "mc"):
        cfg["method"] = {"name": name, "n_paths": 400_000} if name == "mc" else {"name": name}
        code, res = price(tmp_path, cfg, f"{name}.json")
        assert code == 0
        prices[name] = res
    assert prices["kirk"]["price"] == pytest.approx(prices["quadrature"]["price"], rel=0.005)
    mc = prices["mc"]
    assert abs(mc["price"] - prices["quadrature"]["price"]) < 3 * mc["std_error"]


def test_merton_series_method_matches_mc(tmp_path):
    cfg = base()
    cfg["model"]["gas"].update(sigma=0.0, **{"lambda": 0.0})
    cfg["method"] = {"name": "merton_series"}
    code, ms = price(tmp_path, cfg, "ms.json", ["--report"])
    assert code == 0 and ms["convergence"]["converged"]
    cfg["method"] = {"name": "mc", "n_paths": 1_000_000}
    _, mc = price(tmp_path, cfg, "mc.json")
    assert abs(ms["price"] - mc["price"]) < 3 * mc["std_error"]


def test_bad_window_names_field(tmp_path, capsys):
    cfg = base()
    cfg["contract"].update(tau1=1.2, tau2=1.1)
    code, _ = price(tmp_path, cfg)
    assert code == 2
    assert "contract: tau1:" in capsys.readouterr().err


@pytest.mark.parametrize("mutate, field", [
    (lambda c: c["model"]["electricity"].update(sigma="high"), "model"),
    (lambda c: c.update(seed=-1), "seed"),
    (lambda c: c["method"].update(name="magic"), "method.name"),
    (lambda c: c.update(schema="v0"), "schema"),
    (lambda c: c["contract"].update(heat_rate=-1.0), "contract: heat_rate"),
])
def test_invalid_configs_exit_2(tmp_path, capsys, mutate, field):
    cfg = base()
    mutate(cfg)
    code, _ = price(tmp_path, cfg)
    assert code == 2
    assert field in capsys.readouterr().err


def test_missing_and_malformed_files(tmp_path):
    assert main(["price", "--config", str(tmp_path / "nope.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["price", "--config", str(bad)]) == 2


def test_closed_form_needs_single_day(tmp_path, capsys):
    cfg = base()
    cfg["contract"]["tau2"] = 1.0 + 7 / 365
    cfg["method"] = {"name": "kirk"}
    code, _ = price(tmp_path, cfg)
    assert code == 2 and "tau1" in capsys.readouterr().err


def test_non_convergence_exit_3(tmp_path, capsys):
    cfg = base()
    cfg["method"]["truncation"] = {"stop_tol": 1e-12, "max_diagonal": 3, "weight_tail_tol": 1e-12}
    code, res = price(tmp_path, cfg, extra=["--report"])
    assert code == 3
    assert res["convergence"]["converged"] is False
    assert math.isfinite(res["price"]) and res["warnings"]


def test_report_flag_controls_convergence_block(tmp_path):
    _, plain = price(tmp_path, base(), "p.json")
    _, full = price(tmp_path, base(), "f.json", ["--report"])
    assert "convergence" not in plain
    assert full["convergence"]["converged"] is True
    assert full["bounds"]["lower_applicable"] is False


@pytest.mark.parametrize("name", ["merton_base", "merton_kirk", "merton_mc", "two_factor_mc"])
def test_golden_price_files(tmp_path, name):
    assert main(["price", "--config", str(CONFIGS / f"{name}.json"), "--out", str(tmp_path), "--report"]) == 0
    assert (tmp_path / f"{name}.price.json").read_bytes() == (GOLDEN / f"{name}.price.json").read_bytes()


def test_golden_series_inside_mc_interval():
    series = json.loads((GOLDEN / "merton_base.price.json").read_text())
    mc = json.loads((GOLDEN / "merton_mc.price.json").read_text())
    assert abs(series["price"] - mc["price"]) < 3 * mc["std_error"]


def test_seed_override_changes_mc(tmp_path):
    cfg = json.loads((CONFIGS / "two_factor_mc.json").read_text())
    cfg["method"]["n_paths"] = 1000
    path = write(tmp_path, cfg)
    main(["price", "--config", str(path), "--out", str(tmp_path / "a")])
    main(["price", "--config", str(path), "--out", str(tmp_path / "b"), "--seed", "8"])
    a = json.loads((tmp_path / "a" / "cfg.price.json").read_text())
    b = json.loads((tmp_path / "b" / "cfg.price.json").read_text())
    assert b["seed"] == 8 and a["price"] != b["price"]


# simulate

def _digest(directory):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(directory.iterdir())}


def test_simulate_reproducible_and_golden(tmp_path):
    cfg = CONFIGS / "two_factor_simulate.json"
    for sub in ("a", "b"):
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / sub)]) == 0
    assert _digest(tmp_path / "a") == _digest(tmp_path / "b")
    for name, digest in _digest(tmp_path / "a").items():
        assert digest == hashlib.sha256((GOLDEN / name).read_bytes()).hexdigest()
    t_csv, v_csv = read_csv_paths(tmp_path / "a" / "two_factor_simulate.gas.csv")
    t_bin, v_bin = read_binary_paths(tmp_path / "a" / "two_factor_simulate.gas.bin")
    np.testing.assert_array_equal(t_csv, t_bin)
    np.testing.assert_array_equal(v_csv, v_bin)


def _ou_config(sigma, n_paths, x0=0.0):
    leg = {"alpha": 2.0, "sigma": sigma, "beta": 10.0, "eta": 0.0, "jump_intensity": 0.0, "jump_mean": 0.0,
           "jump_sd": 0.0, "seasonal": {"c0": 30.0, "positive_on": 3.0}, "x0": x0}
    return {"schema": "sparkspread-params-v1",
            "model": {"family": "two_factor", "rho": 0.0, "electricity": leg, "gas": copy.deepcopy(leg)},
            "simulation": {"start": 0.0, "end": 3.0, "n_steps": 30, "n_paths": n_paths}, "seed": 17}


def test_zero_noise_export_is_closed_form(tmp_path):
    path = write(tmp_path, _ou_config(0.0, 3, x0=1.5), "quiet.json")
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path)]) == 0
    times, values = read_csv_paths(tmp_path / "quiet.electricity.csv")
    np.testing.assert_allclose(values, np.broadcast_to(30.0 + 1.5 * np.exp(-2.0 * times), values.shape), rtol=1e-14)


def test_export_passes_moment_script(tmp_path):
    path = write(tmp_path, _ou_config(1.5, 50_000), "ou.json")
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path)]) == 0
    script = ROOT / "scripts" / "check_simulation_moments.py"
    for tag, extra in (("electricity", []), ("gas", ["--geometric"])):
        run = subprocess.run([sys.executable, str(script), str(tmp_path / f"ou.{tag}.csv"), "--alpha", "2",
                              "--sigma", "1.5", "--level", "30", *extra], capture_output=True, text=True)
        assert run.returncode == 0, run.stdout + run.stderr


def test_simulate_needs_section(tmp_path):
    assert main(["simulate", "--config", str(CONFIGS / "merton_base.json"), "--out", str(tmp_path)]) == 2


# validate

def _deterministic_fixture(tmp_path):
    leg = {"alpha": 1.0, "sigma": 0.0, "beta": 5.0, "eta": 0.0, "jump_intensity": 0.0, "jump_mean": 0.0,
           "jump_sd": 0.0, "seasonal": {"c0": 60.0}}
    gas = dict(leg, seasonal={"c0": 5.0, "positive_on": 1.0})
    cfg = {"schema": "sparkspread-params-v1",
           "model": {"family": "two_factor", "rho": 0.0, "electricity": leg, "gas": gas},
           "contract": {"t": 0.0, "tau": 91 / 365, "tau1": 91 / 365, "tau2": 98 / 365, "heat_rate": 8.0,
                        "r_f": 0.03, "grid_step": 1 / 365}, "seed": 4}
    return write(tmp_path, cfg, "fixture.json")


def test_validate_bounds_on_fixture(tmp_path):
    out = tmp_path / "v"
    assert main(["validate", "bounds", "--config", str(_deterministic_fixture(tmp_path)), "--out", str(out)]) == 0
    rep = json.loads((out / "validate_bounds.json").read_text())
    assert rep["passed"] and len(rep["checks"]) == 1
    assert (out / "validate_bounds.csv").read_text().startswith("suite,check,")


def test_validate_convergence(tmp_path):
    assert main(["validate", "convergence", "--out", str(tmp_path)]) == 0
    checks = json.loads((tmp_path / "validate_convergence.json").read_text())["checks"]
    assert all(c["passed"] for c in checks)


def test_validate_all_aggregates(tmp_path, monkeypatch):
    args = ["validate", "all", "--out", str(tmp_path), "--n-cases", "4", "--n-paths", "20000", "--seed", "5"]
    assert main(args) == 0
    assert {p.name for p in tmp_path.glob("*.json")} == {
        "validate_bounds.json", "validate_oracle.json", "validate_convergence.json"}

    def failing(*_a, **_k):
        rep = SuiteReport("convergence")
        rep.add("forced", 1.0, 0.0, 0.0, False)
        return rep

    monkeypatch.setattr("sparkspread.validation.convergence_suite", failing)
    assert main(args) == 1


# config round trip

@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_config_roundtrip(path):
    cfg = load_config(path)
    assert parse_config(cfg.to_dict()) == cfg
    assert cfg.to_dict() == json.loads(path.read_text())


def test_price_config_requires_contract():
    cfg = parse_config({k: v for k, v in base().items() if k != "contract"})
    with pytest.raises(ConfigError, match="contract"):
        cli.price_config(cfg)
