"""Seeded Monte Carlo valuation of the spark spread and Deng-bound containment checks."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .models import (
    Contract,
    MertonModel,
    MertonParams,
    SeasonalFunction,
    SpotModel,
    TwoFactorJumpParams,
    TwoFactorModel,
)
from .pricing_closed import deng_bounds
from .simulate import (
    BLOCK_SIZE,
    PathSet,
    TimeGrid,
    expected_merton_spot,
    expected_two_factor_spot,
    forward_from_paths,
    simulate_merton,
    simulate_merton_paths,
    simulate_two_factor,
)

CI_Z = 1.96
MIN_PATHS = 100


@dataclass(frozen=True)
class MCResult:
    estimate: float
    std_error: float
    ci95: tuple[float, float]
    n_paths: int
    seed: int
    model_tag: str

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ci95"] = list(self.ci95)
        return d


def contract_grid(contract: Contract) -> TimeGrid:
    """Grid from the valuation time to the end of delivery with step ``grid_step``.

    Delivery days must sit on the grid, so ``tau1 - t`` has to be a whole
    number of steps.
    """
    lead = (contract.tau1 - contract.t) / contract.grid_step
    if abs(lead - round(lead)) > 1e-6:
        raise ValueError(f"tau1: tau1 - t must be a whole number of grid steps for path simulation, got {lead:.6g}")
    n = max(1, round((contract.tau2 - contract.t) / contract.grid_step))
    return TimeGrid(contract.t, contract.tau2, n)


def _terminal_only(model: SpotModel, contract: Contract) -> bool:
    return isinstance(model, MertonModel) and contract.single_day


def simulate_forwards(model: SpotModel, contract: Contract, n_paths: int, seed: int,
                      workers: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Per-path delivery-window forwards ``(F_e, F_g)``."""
    if _terminal_only(model, contract):
        return simulate_merton(model.electricity, model.gas, model.rho, contract.tau1 - contract.t,
                               n_paths, seed, workers)
    grid = contract_grid(contract)
    if isinstance(model, MertonModel):
        pe, pg = simulate_merton_paths(model.electricity, model.gas, model.rho, grid, n_paths, seed, workers)
    else:
        pe, pg = simulate_two_factor(model.electricity, model.gas, model.rho, grid, n_paths, seed, workers)
    return forward_from_paths(pe, contract), forward_from_paths(pg, contract)


def expected_forwards(model: SpotModel, contract: Contract) -> tuple[float, float]:
    """Exact means of the forwards produced by :func:`simulate_forwards`."""
    if _terminal_only(model, contract):
        dt = contract.tau1 - contract.t
        return float(expected_merton_spot(model.electricity, dt)), float(expected_merton_spot(model.gas, dt))
    grid = contract_grid(contract)
    if isinstance(model, MertonModel):
        me = expected_merton_spot(model.electricity, grid.times - grid.start)
        mg = expected_merton_spot(model.gas, grid.times - grid.start)
    else:
        me = expected_two_factor_spot(model.electricity, grid, geometric=False)
        mg = expected_two_factor_spot(model.gas, grid, geometric=True)
    fe = forward_from_paths(PathSet(grid, me[None, :], "mean", 0), contract)[0]
    fg = forward_from_paths(PathSet(grid, mg[None, :], "mean", 0), contract)[0]
    return float(fe), float(fg)


def _block_fsum(x: np.ndarray) -> float:
    return math.fsum(float(np.sum(x[i:i + BLOCK_SIZE])) for i in range(0, x.size, BLOCK_SIZE))


def summarize(payoffs: np.ndarray, seed: int, model_tag: str) -> MCResult:
    n = payoffs.size
    if n < 2:
        raise ValueError("need at least two samples")
    if np.all(payoffs == payoffs[0]):
        est, se = float(payoffs[0]), 0.0
    else:
        est = _block_fsum(payoffs) / n
        var = _block_fsum((payoffs - est) ** 2) / (n - 1)
        se = math.sqrt(var / n)
    return MCResult(est, se, (est - CI_Z * se, est + CI_Z * se), n, seed, model_tag)


def mc_spark_spread(model: SpotModel, contract: Contract, n_paths: int, seed: int,
                    workers: int | None = None) -> MCResult:
    """Monte Carlo value of ``e^{-r_f (tau - t)} E[(F_e - r_g F_g - K)^+]``.

    Merton models with a single delivery day are sampled exactly at that
    day; every other combination is simulated on :func:`contract_grid`.
    """
    if n_paths < MIN_PATHS:
        raise ValueError(f"n_paths must be >= {MIN_PATHS}, got {n_paths}")
    fe, fg = simulate_forwards(model, contract, n_paths, seed, workers)
    payoff = contract.discount * np.maximum(fe - contract.heat_rate * fg - contract.cost, 0.0)
    return summarize(payoff, seed, model.family)


# ---------------------------------------------------------------- bound sweep

@dataclass
class ContainmentReport:
    rows: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r["passed"] for r in self.rows)

    @property
    def containment_rate(self) -> float:
        return sum(r["passed"] for r in self.rows) / len(self.rows) if self.rows else 1.0

    def to_dict(self) -> dict:
        return {"n_cases": len(self.rows), "passed": self.passed,
                "containment_rate": self.containment_rate, "cases": self.rows}

    def write_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def write_csv(self, path: str | Path) -> None:
        if not self.rows:
            Path(path).write_text("")
            return
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(self.rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(self.rows)


def random_case(rng: np.random.Generator, family: str, cost: float = 0.0) -> tuple[SpotModel, Contract]:
    """Draw a plausible randomized model/contract pair for the bound sweep."""
    u = rng.uniform
    r_f = u(0.0, 0.06)
    step = 1.0 / 52.0
    tau = step * int(rng.integers(3, 53) if family == "merton" else rng.integers(3, 27))
    weeks = int(rng.integers(0, 5))
    contract = Contract(t=0.0, tau=tau, tau1=tau, tau2=tau + weeks * step, heat_rate=u(5.0, 10.0),
                        cost=cost, r_f=r_f, grid_step=step)
    if family == "merton":
        def leg(lo, hi):
            return MertonParams(s0=u(lo, hi), r=r_f, q=u(0.0, 0.05), sigma=u(0.1, 0.6), lam=u(0.0, 2.0),
                                m=u(-0.2, 0.2), s=u(0.0, 0.3))
        return MertonModel(leg(30.0, 80.0), leg(2.0, 8.0), u(-0.9, 0.9)), contract
    a_e = u(1.0, 10.0)
    c0_g = u(2.0, 6.0)
    elec = TwoFactorJumpParams(
        alpha=a_e, sigma=u(2.0, 15.0), beta=u(max(a_e, 20.0), 100.0), eta=1.0,
        jump_intensity=u(0.0, 20.0), jump_mean=u(5.0, 30.0), jump_sd=u(0.0, 10.0),
        seasonal=SeasonalFunction(u(40.0, 80.0), 0.0, ((u(0.0, 10.0), 1.0, u(0.0, 2 * math.pi)),)),
    )
    a_g = u(0.5, 5.0)
    gas = TwoFactorJumpParams(
        alpha=a_g, sigma=u(0.1, 0.6), beta=u(max(a_g, 10.0), 50.0), eta=1.0,
        jump_intensity=u(0.0, 10.0), jump_mean=u(0.0, 0.3), jump_sd=u(0.0, 0.2),
        seasonal=SeasonalFunction(c0_g, 0.0, ((u(0.0, 0.5) * c0_g, 1.0, u(0.0, 2 * math.pi)),),
                                  positive_on=contract.tau2),
    )
    return TwoFactorModel(elec, gas, u(-0.9, 0.9)), contract


def check_containment(model: SpotModel, contract: Contract, n_paths: int, seed: int,
                      workers: int | None = None) -> dict:
    """One row of the sweep: MC estimate against bounds built from exact mean forwards."""
    res = mc_spark_spread(model, contract, n_paths, seed, workers)
    f_e, f_g = expected_forwards(model, contract)
    bounds = deng_bounds(max(f_e, 0.0), f_g, contract)
    tol = 3.0 * res.std_error
    upper_ok = res.estimate <= bounds.upper + tol
    lower_ok = res.estimate >= bounds.lower - tol if bounds.lower_applicable else None
    return {
        "family": model.family,
        "cost": contract.cost,
        "estimate": res.estimate,
        "std_error": res.std_error,
        "lower": bounds.lower,
        "upper": bounds.upper,
        "lower_applicable": bounds.lower_applicable,
        "lower_ok": lower_ok,
        "upper_ok": upper_ok,
        "passed": bool(upper_ok and lower_ok is not False),
    }


def bound_containment_sweep(n_cases: int = 200, seed: int = 0, n_paths: int = 10_000, cost: float = 0.0,
                            workers: int | None = None) -> ContainmentReport:
    """Randomized check of ``lower - 3 SE <= MC estimate <= upper + 3 SE``.

    Cases alternate between the Merton and two-factor families.  Case
    parameters come from a Philox stream keyed by ``seed``; each case's
    paths use a seed drawn from that stream.
    """
    if n_cases < 1:
        raise ValueError("n_cases must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=seed))
    report = ContainmentReport()
    for i in range(n_cases):
        family = "merton" if i % 2 == 0 else "two_factor"
        model, contract = random_case(rng, family, cost)
        case_seed = int(rng.integers(0, 2**63))
        row = {"case": i, "seed": case_seed}
        row.update(check_containment(model, contract, n_paths, case_seed, workers))
        report.rows.append(row)
    return report
