"""Two-asset jump-mixture price of a spread option under Merton dynamics.

Conditioning on the jump counts ``(i, j)`` of the two commodities makes the
terminal prices jointly lognormal, so the price is a Poisson-weighted double
series of lognormal spread prices.  The series is summed by anti-diagonals
``i + j = d`` until consecutive partial sums agree and a rigorous bound on
the dropped terms is small.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtr
from scipy.stats import poisson

from .models import MertonParams, merton_kappa
from .pricing_closed import SpreadInputs, kirk_spread


@dataclass(frozen=True)
class SeriesTerm:
    i: int
    j: int
    weight: float
    x1_tilde: float
    x2_tilde: float
    sigma1_tilde: float
    sigma2_tilde: float
    rho_tilde: float
    term_price: float | None = None


def _log_poisson_pmf(n: int, mu: float) -> float:
    if mu == 0.0:
        return 0.0 if n == 0 else -math.inf
    return n * math.log(mu) - mu - math.lgamma(n + 1)


def term_transform(params_e: MertonParams, params_g: MertonParams, i: int, j: int, T: float,
                   rho: float) -> SeriesTerm:
    """Jump-adjusted lognormal parameters given ``i`` and ``j`` jumps by time ``T``.

    ``x*_tilde`` are conditional forwards ``E[S(T) | N = n]``, so the
    weight-averaged ``x1_tilde`` recovers ``s0 e^{(r - q) T}``.
    """
    if i < 0 or j < 0:
        raise ValueError("jump counts must be nonnegative")
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")

    def leg(p: MertonParams, n: int) -> tuple[float, float]:
        drift = (p.r - p.q - p.lam * merton_kappa(p)) * T + n * (p.m + 0.5 * p.s * p.s)
        return p.s0 * math.exp(drift), math.sqrt(p.sigma**2 + n * p.s**2 / T)

    x1, v1 = leg(params_e, i)
    x2, v2 = leg(params_g, j)
    denom = v1 * v2
    rho_t = rho * params_e.sigma * params_g.sigma / denom if denom > 0 else 0.0
    weight = math.exp(_log_poisson_pmf(i, params_e.lam * T) + _log_poisson_pmf(j, params_g.lam * T))
    return SeriesTerm(i, j, weight, x1, x2, v1, v2, rho_t)


def spread_price_quadrature(x1: float, x2: float, k: float, sigma1: float, sigma2: float, rho: float,
                            dt: float, r_f: float = 0.0, n_nodes: int = 64) -> float:
    """Spread option ``(S1 - S2 - k)^+`` on pre-paid forward legs by conditioning.

    Gauss-Hermite nodes integrate over the short leg's Gaussian driver; given
    that driver the long leg is lognormal and the inner integral is a
    Black-Scholes value against ``S2 + k e^{-r dt}``.
    """
    if n_nodes < 8:
        raise ValueError(f"need at least 8 quadrature nodes, got {n_nodes}")
    SpreadInputs(x1, x2, k, sigma1, sigma2, rho, dt, r_f)
    v1 = sigma1 * math.sqrt(dt)
    v2 = sigma2 * math.sqrt(dt)
    if v2 == 0.0:
        rho = 0.0  # correlation with a deterministic leg is immaterial
    z, w = np.polynomial.hermite_e.hermegauss(n_nodes)
    w = w / math.sqrt(2.0 * math.pi)
    short = x2 * np.exp(-0.5 * v2 * v2 + v2 * z) + k * math.exp(-r_f * dt)
    long_mean = x1 * np.exp(-0.5 * (rho * v1) ** 2 + rho * v1 * z)
    vc = v1 * math.sqrt(max(1.0 - rho * rho, 0.0))
    if vc > 0.0:
        d1 = np.log(long_mean / short) / vc + 0.5 * vc
        inner = long_mean * ndtr(d1) - short * ndtr(d1 - vc)
    else:
        inner = np.maximum(long_mean - short, 0.0)
    price = math.fsum(w * inner)
    if not math.isfinite(price):
        raise FloatingPointError("non-finite value in spread quadrature")
    return max(price, 0.0)


@dataclass(frozen=True)
class TruncationPolicy:
    stop_tol: float = 1e-6
    max_diagonal: int = 60
    weight_tail_tol: float = 1e-8


def adaptive_truncation(stop_tol: float = 1e-6, max_diagonal: int = 60,
                        weight_tail_tol: float = 1e-8) -> TruncationPolicy:
    """Validated :class:`TruncationPolicy` for :func:`jump_series_price`."""
    if not stop_tol > 0:
        raise ValueError(f"stop_tol must be positive, got {stop_tol}")
    if int(max_diagonal) != max_diagonal or max_diagonal < 1:
        raise ValueError(f"max_diagonal must be an integer >= 1, got {max_diagonal}")
    if not weight_tail_tol > 0:
        raise ValueError(f"weight_tail_tol must be positive, got {weight_tail_tol}")
    return TruncationPolicy(stop_tol, int(max_diagonal), weight_tail_tol)


@dataclass
class ConvergenceReport:
    terms_evaluated: int = 0
    diagonals: int = 0
    # largest jump counts (i, j) reached
    final_diagonal: tuple[int, int] = (0, 0)
    error_sequence: list[float] = field(default_factory=list)
    tail_mass_bound: float = 1.0
    tail_price_bound: float = math.inf
    converged: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["final_diagonal"] = list(self.final_diagonal)
        return d


class SeriesNotConverged(ArithmeticError):
    """The series hit ``max_diagonal`` before meeting its stopping rule."""

    def __init__(self, partial: float, report: ConvergenceReport):
        super().__init__(
            f"series not converged after {report.diagonals} diagonals: "
            f"partial sum {partial:.10g}, tail bound {report.tail_price_bound:.3g}"
        )
        self.partial = partial
        self.report = report


def inner_price(term: SeriesTerm, k: float, T: float, r_f: float, inner: str, heat_rate: float = 1.0,
                n_nodes: int = 64) -> float:
    """Lognormal spread price for one conditional term, legs discounted to today."""
    disc = math.exp(-r_f * T)
    x1 = disc * term.x1_tilde
    x2 = disc * heat_rate * term.x2_tilde
    if inner == "kirk":
        return kirk_spread(SpreadInputs(x1, x2, k, term.sigma1_tilde, term.sigma2_tilde, term.rho_tilde, T, r_f))
    if inner == "quadrature":
        return spread_price_quadrature(x1, x2, k, term.sigma1_tilde, term.sigma2_tilde, term.rho_tilde, T, r_f,
                                       n_nodes)
    raise ValueError(f"inner must be 'kirk' or 'quadrature', got {inner!r}")


def dropped_price_bound(params_e: MertonParams, params_g: MertonParams, d: int, T: float, r_f: float) -> float:
    """Bound on the total value of all terms with ``i + j > d``.

    Each inner price is below its discounted long-leg forward; summing that
    against the Poisson weights tilts the electricity count to intensity
    ``lam_e (1 + kappa_e)``.
    """
    mu = params_e.lam * T * (1.0 + merton_kappa(params_e)) + params_g.lam * T
    if mu == 0.0:
        return 0.0
    mean_e = params_e.s0 * math.exp((params_e.r - params_e.q) * T)
    return math.exp(-r_f * T) * mean_e * float(poisson.sf(d, mu))


def jump_series_price(
    params_e: MertonParams,
    params_g: MertonParams,
    rho: float,
    k: float,
    T: float,
    r_f: float,
    inner: str = "quadrature",
    policy: TruncationPolicy | None = None,
    heat_rate: float = 1.0,
    n_nodes: int = 64,
) -> tuple[float, ConvergenceReport]:
    """Price ``E[e^{-r_f T} (S_e(T) - heat_rate * S_g(T) - k)^+]`` as a jump-count mixture.

    Anti-diagonal ``d`` adds every term with ``i + j = d``.  The expansion stops
    once ``|V_d - V_{d-1}| <= stop_tol`` and the dropped-value bound is at most
    ``weight_tail_tol``, or as soon as no terms remain.  Raises
    :class:`SeriesNotConverged` at ``max_diagonal``.
    """
    policy = policy or TruncationPolicy()
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [-1, 1], got {rho}")
    mu_e, mu_g = params_e.lam * T, params_g.lam * T
    report = ConvergenceReport()
    contributions: list[float] = []
    previous = 0.0
    value = 0.0
    for d in range(policy.max_diagonal + 1):
        for i in range(d + 1):
            j = d - i
            if (i > 0 and mu_e == 0.0) or (j > 0 and mu_g == 0.0):
                continue
            term = term_transform(params_e, params_g, i, j, T, rho)
            if term.weight == 0.0:
                continue
            p = inner_price(term, k, T, r_f, inner, heat_rate, n_nodes)
            contributions.append(term.weight * p)
            report.terms_evaluated += 1
        value = math.fsum(contributions)
        error = abs(value - previous)
        previous = value
        report.error_sequence.append(error)
        report.diagonals = d + 1
        report.final_diagonal = (d, 0) if mu_g == 0.0 else (0, d) if mu_e == 0.0 else (d, d)
        mass = float(poisson.sf(d, mu_e + mu_g)) if mu_e + mu_g > 0 else 0.0
        report.tail_mass_bound = min(max(mass, 0.0), 1.0)
        report.tail_price_bound = dropped_price_bound(params_e, params_g, d, T, r_f)
        if mass == 0.0 or (error <= policy.stop_tol and report.tail_price_bound <= policy.weight_tail_tol):
            report.converged = True
            return value, report
    raise SeriesNotConverged(value, report)
