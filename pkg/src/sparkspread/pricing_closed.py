"""Closed-form prices and bounds for spark spread options.

Legs are quoted as *pre-paid* forwards, i.e. present values of the asset
delivered at maturity.  Under that convention the exchange option needs no
discounting and the strike enters as ``k * exp(-r_f * dt)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .models import Contract, MertonParams, merton_kappa

_SQRT2 = math.sqrt(2.0)


def norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / _SQRT2)


def _call_total_vol(fp_s: float, fp_k: float, v: float) -> float:
    # v is the total standard deviation sigma * sqrt(dt)
    if v <= 0.0:
        return max(fp_s - fp_k, 0.0)
    d1 = math.log(fp_s / fp_k) / v + 0.5 * v
    return fp_s * norm_cdf(d1) - fp_k * norm_cdf(d1 - v)


def bs_call_prepaid(fp_s: float, fp_k: float, sigma: float, dt: float) -> float:
    """Black-Scholes call written on pre-paid forwards.

    ``fp_k == 0`` is the zero-strike limit and returns ``fp_s``; ``sigma == 0``
    returns the intrinsic value ``(fp_s - fp_k)^+``.
    """
    if not fp_s > 0:
        raise ValueError(f"fp_s must be positive, got {fp_s}")
    if fp_k < 0:
        raise ValueError(f"fp_k must be nonnegative, got {fp_k}")
    if sigma < 0 or not dt > 0:
        raise ValueError("sigma must be >= 0 and dt > 0")
    if fp_k == 0:
        return fp_s
    return _call_total_vol(fp_s, fp_k, sigma * math.sqrt(dt))


@dataclass(frozen=True)
class SpreadInputs:
    """Two-leg spread option: long ``x1``, short ``x2``, strike ``k`` (all present values except ``k``)."""

    x1: float
    x2: float
    k: float
    sigma1: float
    sigma2: float
    rho: float
    dt: float
    r_f: float = 0.0

    def __post_init__(self):
        if not (self.x1 > 0 and self.x2 > 0):
            raise ValueError(f"legs must be positive, got x1={self.x1}, x2={self.x2}")
        if self.k < 0:
            raise ValueError(f"k must be nonnegative, got {self.k}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must lie in [-1, 1], got {self.rho}")
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise ValueError("volatilities must be nonnegative")


def kirk_spread(inputs: SpreadInputs) -> float:
    """Kirk's approximation for ``(S1 - S2 - k)^+``.

    The short leg plus the discounted strike is treated as one lognormal asset
    whose volatility is ``sigma2`` scaled by ``w = x2 / (x2 + k e^{-r dt})``.
    """
    p = inputs
    strike_pv = p.k * math.exp(-p.r_f * p.dt)
    short = p.x2 + strike_pv
    w = p.x2 / short
    s1, s2 = p.sigma1, p.sigma2
    var = s1 * s1 - 2.0 * p.rho * s1 * s2 * w + s2 * s2 * w * w
    return _call_total_vol(p.x1, short, math.sqrt(max(var, 0.0) * p.dt))


def margrabe(x1: float, x2: float, sigma1: float, sigma2: float, rho: float, dt: float) -> float:
    """Exact value of the option to exchange ``x2`` for ``x1``."""
    SpreadInputs(x1, x2, 0.0, sigma1, sigma2, rho, dt)
    var = sigma1 * sigma1 - 2.0 * rho * sigma1 * sigma2 + sigma2 * sigma2
    return _call_total_vol(x1, x2, math.sqrt(max(var, 0.0) * dt))


@dataclass(frozen=True)
class BoundsResult:
    lower: float
    upper: float
    lower_applicable: bool = True
    warning: str | None = None

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper,
                "lower_applicable": self.lower_applicable, "warning": self.warning}


def deng_bounds(f_e: float, f_g: float, contract: Contract) -> BoundsResult:
    """Model-free bounds for the zero-cost spark spread.

    ``disc * (F_e - r_g F_g)^+ <= V <= disc * F_e``.  With a positive cost
    the upper bound still holds but the lower one no longer does; it is
    returned but flagged.
    """
    if f_e < 0 or f_g < 0:
        raise ValueError("forwards must be nonnegative")
    disc = contract.discount
    lower = disc * max(f_e - contract.heat_rate * f_g, 0.0)
    upper = disc * f_e
    if contract.cost > 0:
        return BoundsResult(lower, upper, False, "bounds assume zero operating cost; lower bound not applicable")
    return BoundsResult(lower, upper)


@dataclass(frozen=True)
class MertonSeries:
    price: float
    n_terms: int
    weight_sum: float
    tail_bound: float


def poisson_tail_bound(n: int, mu: float) -> float:
    """Upper bound on ``P(N > n)`` for ``N ~ Poisson(mu)``, valid when ``n + 2 > mu``.

    Successive pmf ratios beyond ``n + 1`` are at most ``mu / (n + 2)``, so the
    tail is dominated by a geometric series started at ``pmf(n + 1)``.
    """
    if mu == 0.0:
        return 0.0
    ratio = mu / (n + 2)
    if ratio >= 1.0:
        return 1.0
    log_pmf = (n + 1) * math.log(mu) - mu - math.lgamma(n + 2)
    return min(1.0, math.exp(log_pmf) / (1.0 - ratio))


def merton_series(params: MertonParams, strike: float, dt: float, tail_tol: float = 1e-12,
                  max_terms: int = 10_000) -> MertonSeries:
    """Poisson mixture of Black-Scholes prices for a Merton jump diffusion.

    Conditional on ``n`` jumps the terminal price is lognormal with pre-paid
    forward ``s0 e^{-q dt} e^{-lam kappa dt + n (m + s^2/2)}`` and variance
    rate ``sigma^2 + n s^2 / dt``; weights are ``Poisson(lam dt)``.
    Terms are added until :func:`poisson_tail_bound` drops below ``tail_tol``.
    """
    if not 0.0 < tail_tol < 1.0:
        raise ValueError(f"tail_tol must lie in (0, 1), got {tail_tol}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if strike < 0:
        raise ValueError(f"strike must be nonnegative, got {strike}")
    mu = params.lam * dt
    kappa = merton_kappa(params)
    base = params.s0 * math.exp(-params.q * dt)
    fp_k = strike * math.exp(-params.r * dt)
    jump_log = params.m + 0.5 * params.s * params.s
    terms, weights = [], []
    for n in range(max_terms):
        if mu > 0:
            w = math.exp(n * math.log(mu) - mu - math.lgamma(n + 1))
        else:
            w = 1.0 if n == 0 else 0.0
        fp_s = base * math.exp(-params.lam * kappa * dt + n * jump_log)
        sigma_n = math.sqrt(params.sigma**2 + n * params.s**2 / dt)
        if w > 0 and fp_s > 0:
            terms.append(w * bs_call_prepaid(fp_s, fp_k, sigma_n, dt))
        weights.append(w)
        tail = poisson_tail_bound(n, mu)
        if tail < tail_tol:
            return MertonSeries(math.fsum(terms), n + 1, math.fsum(weights), tail)
    raise ArithmeticError(f"Merton series did not reach tail {tail_tol} within {max_terms} terms")


def merton_series_price(params: MertonParams, strike: float, dt: float, tail_tol: float = 1e-12) -> float:
    return merton_series(params, strike, dt, tail_tol).price


def _reduction_map(map_kind: str, x: float) -> float:
    if map_kind == "identity":
        return x
    if map_kind == "log":
        if not x > 0:
            raise ValueError("log map needs a positive gas forward")
        return math.log(x)
    raise ValueError(f"map_kind must be 'identity' or 'log', got {map_kind!r}")


def linear_reduction_price(
    a: float,
    b: float,
    map_kind: str,
    gas_forward: float,
    gas_sigma: float,
    contract: Contract,
    jumps: MertonParams | None = None,
    tail_tol: float = 1e-12,
) -> float:
    """Price the spread when electricity is an affine function of a map of gas.

    The payoff collapses to a call on ``S_hat = a F(gas_forward) + b -
    heat_rate * gas_forward`` struck at the operating cost.  Without jumps
    this is Black-Scholes on pre-paid forwards; with ``jumps`` the gas
    intensity and jump law are taken from that parameter set and the Merton
    series is used.
    """
    s_hat = a * _reduction_map(map_kind, gas_forward) + b - contract.heat_rate * gas_forward
    if not s_hat > 0:
        raise ValueError(f"effective underlying must be positive for a lognormal reduction, got {s_hat:.6g}")
    dt = contract.time_to_maturity
    if jumps is None:
        disc = math.exp(-contract.r_f * dt)
        return bs_call_prepaid(s_hat * disc, contract.cost * disc, gas_sigma, dt)
    # q = r_f turns S_hat into a quantity paid at maturity, matching the no-jump branch.
    eff = MertonParams(s0=s_hat, r=contract.r_f, q=contract.r_f, sigma=gas_sigma,
                       lam=jumps.lam, m=jumps.m, s=jumps.s)
    return merton_series_price(eff, contract.cost, dt, tail_tol)
