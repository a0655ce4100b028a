"""Oracle suites behind ``sparkspread validate``.

Each suite returns a :class:`SuiteReport`: a flat list of named checks with
the two values compared, the tolerance used and a pass flag.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .mc_oracle import bound_containment_sweep, check_containment, mc_spark_spread
from .models import Contract, MertonModel, MertonParams, SpotModel
from .pricing_closed import SpreadInputs, kirk_spread, merton_series_price
from .pricing_series import (
    TruncationPolicy,
    inner_price,
    jump_series_price,
    spread_price_quadrature,
    term_transform,
)

SUITES = ("bounds", "oracle", "convergence", "all")


@dataclass
class SuiteReport:
    suite: str
    checks: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def add(self, name: str, value: float, reference: float, tolerance: float, passed: bool, **extra) -> None:
        self.checks.append({"suite": self.suite, "check": name, "value": value, "reference": reference,
                            "tolerance": tolerance, "passed": bool(passed), **extra})

    def to_dict(self) -> dict:
        return {"suite": self.suite, "passed": self.passed, "checks": self.checks}

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        jpath, cpath = out / f"validate_{self.suite}.json", out / f"validate_{self.suite}.csv"
        jpath.write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        keys: list[str] = []
        for c in self.checks:
            keys += [k for k in c if k not in keys]
        with open(cpath, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=keys, lineterminator="\n")
            writer.writeheader()
            writer.writerows(self.checks)
        return jpath, cpath


def bounds_suite(seed: int = 0, n_cases: int = 200, n_paths: int = 10_000,
                 fixture: tuple[SpotModel, Contract] | None = None) -> SuiteReport:
    """Deng-bound containment: on ``fixture`` if given, else a randomized sweep."""
    report = SuiteReport("bounds")
    if fixture is not None:
        rows = [check_containment(*fixture, n_paths=max(n_paths, 100), seed=seed)]
    else:
        rows = bound_containment_sweep(n_cases, seed, n_paths).rows
    for i, row in enumerate(rows):
        report.add(f"containment[{i}]", row["estimate"], row["upper"], 3.0 * row["std_error"], row["passed"],
                   lower=row["lower"], family=row["family"])
    return report


def _base_merton(lam_e: float = 0.0, lam_g: float = 0.0) -> tuple[MertonParams, MertonParams]:
    pe = MertonParams(s0=100.0, r=0.05, q=0.0, sigma=0.3, lam=lam_e, m=0.1, s=0.15)
    pg = MertonParams(s0=90.0, r=0.05, q=0.0, sigma=0.2, lam=lam_g, m=-0.1, s=0.2)
    return pe, pg


def oracle_suite(seed: int = 0, n_paths: int = 1_000_000) -> SuiteReport:
    """Analytic prices against Monte Carlo at 3 standard errors."""
    report = SuiteReport("oracle")
    k, T, rho, r_f = 5.0, 1.0, 0.4, 0.05
    contract = Contract(t=0.0, tau=T, tau1=T, tau2=T, heat_rate=1.0, cost=k, r_f=r_f)

    pe, pg = _base_merton()
    mc = mc_spark_spread(MertonModel(pe, pg, rho), contract, n_paths, seed)
    disc = math.exp(-r_f * T)
    x1, x2 = disc * pe.s0 * math.exp(pe.r * T), disc * pg.s0 * math.exp(pg.r * T)
    quad = spread_price_quadrature(x1, x2, k, pe.sigma, pg.sigma, rho, T, r_f)
    kirk = kirk_spread(SpreadInputs(x1, x2, k, pe.sigma, pg.sigma, rho, T, r_f))
    tol = 3.0 * mc.std_error
    report.add("quadrature_vs_mc", quad, mc.estimate, tol, abs(quad - mc.estimate) <= tol)
    ktol = max(tol, 0.005 * mc.estimate)
    report.add("kirk_vs_mc", kirk, mc.estimate, ktol, abs(kirk - mc.estimate) <= ktol)

    single = MertonParams(s0=100.0, r=0.05, q=0.0, sigma=0.2, lam=0.5, m=-0.1, s=0.15)
    flat_gas = MertonParams(s0=100.0, r=0.05, q=0.05)
    c1 = Contract(t=0.0, tau=1.0, tau1=1.0, tau2=1.0, heat_rate=1.0, cost=0.0, r_f=0.05)
    mc1 = mc_spark_spread(MertonModel(single, flat_gas, 0.0), c1, n_paths, seed + 1)
    ms = merton_series_price(single, 100.0, 1.0)
    tol = 3.0 * mc1.std_error
    report.add("merton_series_vs_mc", ms, mc1.estimate, tol, abs(ms - mc1.estimate) <= tol)

    pe, pg = _base_merton(0.8, 0.4)
    mc2 = mc_spark_spread(MertonModel(pe, pg, 0.3), contract, n_paths, seed + 2)
    js, _ = jump_series_price(pe, pg, 0.3, k, T, r_f, inner="quadrature")
    tol = 3.0 * mc2.std_error
    report.add("jump_series_vs_mc", js, mc2.estimate, tol, abs(js - mc2.estimate) <= tol)
    return report


def brute_force_series(params_e: MertonParams, params_g: MertonParams, rho: float, k: float, T: float,
                       r_f: float, inner: str, max_diagonal: int = 60) -> float:
    """Plain double loop over all ``i + j <= max_diagonal``; reference for the controller."""
    total = []
    for i in range(max_diagonal + 1):
        for j in range(max_diagonal + 1 - i):
            term = term_transform(params_e, params_g, i, j, T, rho)
            if term.weight > 0.0:
                total.append(term.weight * inner_price(term, k, T, r_f, inner))
    return math.fsum(total)


def convergence_suite(lam_T: float = 1.0, inner: str = "kirk") -> SuiteReport:
    """Truncation certificate at ``lam_e T = lam_g T = lam_T`` against a brute-force sum."""
    report = SuiteReport("convergence")
    T, k, r_f, rho = 1.0, 5.0, 0.05, 0.3
    pe, pg = _base_merton(lam_T / T, lam_T / T)
    policy = TruncationPolicy(stop_tol=1e-10, max_diagonal=20, weight_tail_tol=1e-8)
    price, rep = jump_series_price(pe, pg, rho, k, T, r_f, inner=inner, policy=policy)
    brute = brute_force_series(pe, pg, rho, k, T, r_f, inner, 60)
    last = rep.diagonals - 1
    report.add("converged_by_diagonal_20", last, 20, 0, rep.converged and last <= 20)
    report.add("tail_price_bound", rep.tail_price_bound, 1e-8, 0, rep.tail_price_bound < 1e-8)
    report.add("tail_mass_bound", rep.tail_mass_bound, 1e-8, 0, rep.tail_mass_bound < 1e-8)
    report.add("matches_brute_force_60", price, brute, 1e-9, abs(price - brute) <= 1e-9)
    return report


def run_suite(name: str, seed: int = 0, fixture: tuple[SpotModel, Contract] | None = None,
              **sizes) -> list[SuiteReport]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    reports = []
    if name in ("bounds", "all"):
        reports.append(bounds_suite(seed, sizes.get("n_cases", 200), sizes.get("bounds_paths", 10_000), fixture))
    if name in ("oracle", "all"):
        reports.append(oracle_suite(seed, sizes.get("oracle_paths", 1_000_000)))
    if name in ("convergence", "all"):
        reports.append(convergence_suite())
    return reports
