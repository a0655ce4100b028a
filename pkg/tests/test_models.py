import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparkspread.models import (
    Contract,
    MertonModel,
    MertonParams,
    SeasonalFunction,
    TwoFactorJumpParams,
    TwoFactorModel,
    load_params,
    merton_kappa,
    model_from_dict,
    ou_moments,
    params_from_dict,
    params_to_dict,
    save_params,
    seasonal_eval,
)

pos = st.floats(0.05, 5.0)


def _two_factor(**kw):
    base = dict(alpha=1.0, sigma=0.2, beta=5.0, eta=1.0, jump_intensity=2.0, jump_mean=0.1, jump_sd=0.05,
                seasonal=SeasonalFunction(3.0, positive_on=2.0))
    base.update(kw)
    return TwoFactorJumpParams(**base)


# seasonal level

def test_seasonal_constant():
    assert seasonal_eval(SeasonalFunction(10.0), 3.7) == 10.0


def test_seasonal_single_harmonic_peak():
    assert seasonal_eval(SeasonalFunction(10.0, harmonics=((2.0, 1.0, 0.0),)), 0.25) == pytest.approx(12.0, abs=1e-14)


def test_seasonal_mixed_value():
    # reference from a 30-digit direct evaluation
    fn = SeasonalFunction(30.0, 0.5, ((5.0, 1.0, 0.3), (1.0, 0.5, 1.1)))
    assert seasonal_eval(fn, 0.8) == pytest.approx(25.3260898535377894758, rel=1e-14)


def test_seasonal_rejects_negative_time():
    with pytest.raises(ValueError):
        seasonal_eval(SeasonalFunction(1.0), -0.1)


def test_seasonal_positivity_checked_on_horizon():
    with pytest.raises(ValueError):
        SeasonalFunction(1.0, harmonics=((2.0, 1.0, 0.0),), positive_on=1.0)
    SeasonalFunction(3.0, harmonics=((2.0, 1.0, 0.0),), positive_on=1.0)


def test_seasonal_vectorized():
    fn = SeasonalFunction(1.0, 2.0)
    np.testing.assert_allclose(fn(np.array([0.0, 1.0, 2.0])), [1.0, 3.0, 5.0])


@given(c1=st.floats(-5, 5), amp=st.floats(-3, 3), period=st.floats(0.1, 3), phase=st.floats(-3, 3),
       t=st.floats(0, 10))
def test_seasonal_periodic_up_to_trend(c1, amp, period, phase, t):
    fn = SeasonalFunction(20.0, c1, ((amp, period, phase),))
    assert fn(t + period) - fn(t) == pytest.approx(c1 * period, abs=1e-9 * (1 + abs(fn(t))))


# OU moments

def test_ou_moments_deterministic():
    mean, var = ou_moments(1.0, 0.0, 2.0, 1.0)
    assert mean == pytest.approx(2 * math.exp(-1), rel=1e-15)
    assert var == 0.0


def test_ou_moments_stationary():
    assert ou_moments(0.5, 0.3, 0.0, math.inf) == pytest.approx((0.0, 0.09), rel=1e-15)


def test_ou_moments_reference():
    mean, var = ou_moments(1.0, 0.2, 1.0, 0.5)
    assert mean == pytest.approx(0.6065306597126334, rel=1e-14)
    assert var == pytest.approx(0.012642411176571154, rel=1e-14)


def test_ou_moments_against_fine_euler():
    # independent oracle: Euler scheme with 500 substeps
    rng = np.random.default_rng(1)
    n, steps = 200_000, 500
    dt = 0.5 / steps
    x = np.ones(n)
    for _ in range(steps):
        x += -x * dt + 0.2 * math.sqrt(dt) * rng.standard_normal(n)
    mean, var = ou_moments(1.0, 0.2, 1.0, 0.5)
    se_mean = math.sqrt(var / n)
    se_var = var * math.sqrt(2.0 / n)
    assert abs(x.mean() - mean) < 4 * se_mean + 1e-3
    assert abs(x.var(ddof=1) - var) < 4 * se_var + 1e-4


@given(alpha=pos, sigma=st.floats(0, 3), t1=st.floats(0, 5), t2=st.floats(0, 5))
def test_ou_variance_monotone_and_bounded(alpha, sigma, t1, t2):
    lo, hi = sorted((t1, t2))
    v_lo, v_hi = ou_moments(alpha, sigma, 0.0, lo)[1], ou_moments(alpha, sigma, 0.0, hi)[1]
    cap = sigma**2 / (2 * alpha)
    assert 0.0 <= v_lo <= v_hi * (1 + 1e-12) + 1e-300
    assert v_hi <= cap * (1 + 1e-12)


# kappa

def test_kappa_examples():
    assert merton_kappa(MertonParams(1.0, 0.0, m=0.0, s=0.0)) == 0.0
    assert merton_kappa(MertonParams(1.0, 0.0, m=math.log(2), s=0.0)) == pytest.approx(1.0, rel=1e-15)
    assert merton_kappa(MertonParams(1.0, 0.0, m=0.1, s=0.2)) == pytest.approx(0.12749685157937567, rel=1e-14)


def test_kappa_against_sample_mean():
    z = np.random.default_rng(2).normal(0.1, 0.2, 1_000_000)
    v = np.expm1(z)
    k = merton_kappa(MertonParams(1.0, 0.0, m=0.1, s=0.2))
    assert abs(v.mean() - k) < 4 * v.std(ddof=1) / math.sqrt(v.size)


@given(m=st.floats(-2, 2), s=st.floats(0, 1.5))
def test_kappa_lower_bound(m, s):
    k = merton_kappa(MertonParams(1.0, 0.0, m=m, s=s))
    assert k >= -1.0
    assert k >= math.expm1(m) - 1e-15 * (1 + abs(k))
    if s > 1e-6:
        assert k > math.expm1(m)


# parameter validation

@pytest.mark.parametrize("kw", [dict(alpha=0.0), dict(beta=0.5, alpha=1.0), dict(sigma=-0.1), dict(eta=-1.0),
                                dict(jump_intensity=-1.0), dict(jump_sd=-0.1)])
def test_two_factor_rejects(kw):
    with pytest.raises(ValueError):
        _two_factor(**kw)


@pytest.mark.parametrize("kw", [dict(sigma=-0.1), dict(lam=-1.0), dict(s=-0.1), dict(s0=0.0)])
def test_merton_rejects(kw):
    base = dict(s0=100.0, r=0.05, sigma=0.2)
    base.update(kw)
    with pytest.raises(ValueError):
        MertonParams(**base)


@pytest.mark.parametrize("kw, field", [
    (dict(tau=0.0), "tau"),
    (dict(tau1=0.5), "tau1"),
    (dict(tau1=1.2, tau2=1.1), "tau1"),
    (dict(heat_rate=0.0), "heat_rate"),
    (dict(cost=-1.0), "cost"),
    (dict(tau2=1.0 + 1.5 / 365), "grid_step"),
])
def test_contract_rejects_and_names_field(kw, field):
    base = dict(t=0.0, tau=1.0, tau1=1.0, tau2=1.0 + 10 / 365, heat_rate=8.0)
    base.update(kw)
    with pytest.raises(ValueError, match=f"^{field}:"):
        Contract(**base)


def test_contract_single_day():
    c = Contract(t=0.0, tau=0.5, tau1=0.5, tau2=0.5, heat_rate=7.0, r_f=0.04)
    assert c.single_day
    assert c.discount == pytest.approx(math.exp(-0.02))


# serialization

@given(s0=st.floats(1, 500), r=st.floats(-0.05, 0.2), sigma=st.floats(0, 1), lam=st.floats(0, 5),
       m=st.floats(-1, 1), s=st.floats(0, 1))
def test_merton_roundtrip(s0, r, sigma, lam, m, s):
    p = MertonParams(s0, r, 0.0, sigma, lam, m, s)
    assert params_from_dict(params_to_dict(p)) == p


def test_two_factor_file_roundtrip(tmp_path):
    p = _two_factor(seasonal=SeasonalFunction(3.0, 0.1, ((0.5, 1.0, 0.2),), positive_on=2.0), x0=0.1, y0=-0.2)
    path = tmp_path / "p.json"
    save_params(p, path)
    assert load_params(path) == p
    assert '"schema": "sparkspread-params-v1"' in path.read_text()


def test_merton_json_uses_lambda_key():
    assert params_to_dict(MertonParams(100.0, 0.05, lam=0.3))["params"]["lambda"] == 0.3


def test_model_roundtrip():
    for model in (MertonModel(MertonParams(100.0, 0.05, sigma=0.3), MertonParams(9.0, 0.05, sigma=0.2), 0.3),
                  TwoFactorModel(_two_factor(), _two_factor(), -0.2)):
        assert model_from_dict(model.to_dict()) == model
