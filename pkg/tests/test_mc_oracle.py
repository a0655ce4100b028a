import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparkspread.mc_oracle import (
    bound_containment_sweep,
    check_containment,
    contract_grid,
    expected_forwards,
    mc_spark_spread,
    simulate_forwards,
    summarize,
)
from sparkspread.models import Contract, MertonModel, MertonParams, SeasonalFunction, TwoFactorJumpParams, TwoFactorModel
from sparkspread.pricing_closed import merton_series_price

WEEK = 1 / 52


def flat(level, **kw):
    return TwoFactorJumpParams(1.0, 0.0, 5.0, 0.0, 0.0, 0.0, 0.0, SeasonalFunction(level, positive_on=2.0), **kw)


def window(cost=0.0, r_f=0.04, weeks=4):
    return Contract(t=0.0, tau=8 * WEEK, tau1=8 * WEEK, tau2=(8 + weeks) * WEEK, heat_rate=8.0, cost=cost,
                    r_f=r_f, grid_step=WEEK)


def test_deterministic_model_is_exact():
    model = TwoFactorModel(flat(60.0), flat(5.0), 0.0)
    c = window(cost=3.0)
    res = mc_spark_spread(model, c, 500, seed=1)
    # forwards average the constant levels with in-window discounting
    w = np.exp(-0.04 * WEEK * np.arange(5))
    f_e, f_g = 60.0 * w.mean(), 5.0 * w.mean()
    assert res.estimate == pytest.approx(math.exp(-0.04 * 8 * WEEK) * (f_e - 8 * f_g - 3.0), rel=1e-14)
    assert res.std_error == 0.0
    assert res.ci95 == (res.estimate, res.estimate)


def test_same_seed_same_result():
    model = MertonModel(MertonParams(50.0, 0.04, sigma=0.4, lam=1.0, m=0.1, s=0.2),
                        MertonParams(5.0, 0.04, sigma=0.3), 0.5)
    a = mc_spark_spread(model, window(), 2000, seed=99)
    b = mc_spark_spread(model, window(), 2000, seed=99)
    assert a == b
    assert mc_spark_spread(model, window(), 2000, seed=100) != a


def test_ci_contains_merton_series():
    p = MertonParams(s0=100.0, r=0.05, sigma=0.2, lam=0.5, m=-0.1, s=0.15)
    gas = MertonParams(s0=100.0, r=0.05, q=0.05)
    c = Contract(t=0.0, tau=1.0, tau1=1.0, tau2=1.0, heat_rate=1.0, r_f=0.05)
    res = mc_spark_spread(MertonModel(p, gas, 0.0), c, 1_000_000, seed=20261016)
    lo, hi = res.ci95
    assert lo <= merton_series_price(p, 100.0, 1.0) <= hi


def test_standard_error_scaling():
    model = MertonModel(MertonParams(50.0, 0.04, sigma=0.4), MertonParams(5.0, 0.04, sigma=0.3), 0.2)
    c = Contract(t=0.0, tau=0.5, tau1=0.5, tau2=0.5, heat_rate=8.0, r_f=0.04)
    ratios = [mc_spark_spread(model, c, 10_000, seed=s).std_error / mc_spark_spread(model, c, 40_000, seed=s).std_error
              for s in range(5)]
    assert np.mean(ratios) == pytest.approx(2.0, rel=0.2)


def test_worker_layout_invariance():
    model = TwoFactorModel(
        TwoFactorJumpParams(5.0, 8.0, 40.0, 1.0, 10.0, 15.0, 5.0, SeasonalFunction(60.0)),
        TwoFactorJumpParams(2.0, 0.4, 20.0, 1.0, 5.0, 0.1, 0.1, SeasonalFunction(4.0, positive_on=1.0)),
        0.4,
    )
    a = mc_spark_spread(model, window(), 20_000, seed=3, workers=1)
    b = mc_spark_spread(model, window(), 20_000, seed=3, workers=4)
    assert a == b


@settings(max_examples=15)
@given(sigma=st.floats(0.05, 1.0), cost=st.floats(0, 50), seed=st.integers(0, 2**40))
def test_estimate_nonnegative(sigma, cost, seed):
    model = MertonModel(MertonParams(40.0, 0.02, sigma=sigma), MertonParams(5.0, 0.02, sigma=sigma), 0.0)
    c = Contract(t=0.0, tau=0.5, tau1=0.5, tau2=0.5, heat_rate=8.0, cost=cost)
    assert mc_spark_spread(model, c, 200, seed).estimate >= 0.0


def test_expected_forwards_match_simulation():
    model = TwoFactorModel(
        TwoFactorJumpParams(5.0, 8.0, 40.0, 1.0, 10.0, 15.0, 5.0, SeasonalFunction(60.0)),
        TwoFactorJumpParams(2.0, 0.4, 20.0, 1.0, 5.0, 0.1, 0.1, SeasonalFunction(4.0, positive_on=1.0)),
        0.4,
    )
    fe, fg = simulate_forwards(model, window(), 100_000, seed=6)
    ee, eg = expected_forwards(model, window())
    assert abs(fe.mean() - ee) < 4 * fe.std() / math.sqrt(fe.size)
    assert abs(fg.mean() - eg) < 4 * fg.std() / math.sqrt(fg.size)


def test_contract_grid_alignment():
    g = contract_grid(window())
    assert g.n_steps == 12 and g.step == pytest.approx(WEEK)
    off = Contract(t=0.0, tau=0.1, tau1=0.1, tau2=0.1 + 2 * WEEK, heat_rate=8.0, grid_step=WEEK)
    with pytest.raises(ValueError, match="^tau1:"):
        contract_grid(off)


def test_summarize_needs_samples():
    with pytest.raises(ValueError):
        summarize(np.array([1.0]), 0, "x")
    with pytest.raises(ValueError):
        mc_spark_spread(TwoFactorModel(flat(60.0), flat(5.0), 0.0), window(), 50, seed=1)


def test_deterministic_case_inside_bounds():
    row = check_containment(TwoFactorModel(flat(60.0), flat(5.0), 0.0), window(), 200, seed=0)
    assert row["passed"] and row["lower"] <= row["estimate"] <= row["upper"]


def test_positive_cost_keeps_upper_bound():
    model = MertonModel(MertonParams(50.0, 0.04, sigma=0.4, lam=1.0, m=0.1, s=0.2),
                        MertonParams(5.0, 0.04, sigma=0.3), 0.3)
    row = check_containment(model, window(cost=5.0), 20_000, seed=8)
    assert row["passed"] and row["upper_ok"]
    assert row["lower_applicable"] is False and row["lower_ok"] is None


def test_small_sweep_and_report_files(tmp_path):
    rep = bound_containment_sweep(10, seed=3, n_paths=2000)
    assert rep.passed and rep.containment_rate == 1.0
    assert {r["family"] for r in rep.rows} == {"merton", "two_factor"}
    rep.write_json(tmp_path / "s.json")
    rep.write_csv(tmp_path / "s.csv")
    assert json.loads((tmp_path / "s.json").read_text())["passed"] is True
    with open(tmp_path / "s.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 10
    again = bound_containment_sweep(10, seed=3, n_paths=2000)
    assert again.rows == rep.rows
