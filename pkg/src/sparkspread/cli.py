"""Command-line front end: ``sparkspread price|simulate|validate``.

Exit codes: 0 success, 1 a validation check failed, 2 bad input, 3 series
not converged.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .config import SCHEMA_VERSION, ConfigError, RunConfig, dump_json, load_config
from .mc_oracle import expected_forwards, mc_spark_spread
from .models import MertonModel, MertonParams
from .pricing_closed import (
    SpreadInputs,
    bs_call_prepaid,
    deng_bounds,
    kirk_spread,
    linear_reduction_price,
    margrabe,
    merton_series,
)
from .pricing_series import SeriesNotConverged, adaptive_truncation, jump_series_price, spread_price_quadrature
from .simulate import TimeGrid, simulate_merton_paths, simulate_two_factor
from .validation import SUITES, run_suite

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INVALID, EXIT_NOT_CONVERGED = 0, 1, 2, 3


@dataclass
class PriceResult:
    price: float
    method: str
    seed: int
    std_error: float | None = None
    ci95: tuple[float, float] | None = None
    bounds: dict | None = None
    convergence: dict | None = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {"schema": SCHEMA_VERSION, "method": self.method, "price": self.price, "seed": self.seed}
        if self.std_error is not None:
            d["std_error"] = self.std_error
            d["ci95"] = list(self.ci95)
        d["bounds"] = self.bounds
        if self.convergence is not None:
            d["convergence"] = self.convergence
        d["warnings"] = self.warnings
        return d


def _require_single_day_merton(cfg: RunConfig, method: str) -> tuple[MertonParams, MertonParams, float]:
    c = cfg.contract
    if not isinstance(cfg.model, MertonModel):
        raise ConfigError("method.name", f"{method} needs the merton model family")
    if not (c.tau == c.tau1 == c.tau2):
        raise ConfigError("contract.tau1", f"{method} prices a single delivery day at maturity (tau == tau1 == tau2)")
    return cfg.model.electricity, cfg.model.gas, c.tau - c.t


def _lognormal_legs(cfg: RunConfig, method: str, warnings: list[str]):
    pe, pg, dt = _require_single_day_merton(cfg, method)
    if pe.lam > 0 or pg.lam > 0:
        warnings.append(f"{method} ignores jumps; only diffusion volatilities are used")
    disc = math.exp(-cfg.contract.r_f * dt)
    x1 = disc * pe.s0 * math.exp((pe.r - pe.q) * dt)
    x2 = disc * cfg.contract.heat_rate * pg.s0 * math.exp((pg.r - pg.q) * dt)
    return pe, pg, dt, x1, x2


def price_config(cfg: RunConfig) -> PriceResult:
    """Dispatch a validated config to its pricing method."""
    if cfg.contract is None:
        raise ConfigError("contract", "required for pricing")
    if cfg.method is None:
        raise ConfigError("method", "required for pricing")
    m, c = cfg.method, cfg.contract
    name = m["name"]
    warnings: list[str] = []
    res = PriceResult(math.nan, name, cfg.seed, warnings=warnings)

    if name == "mc":
        mc = mc_spark_spread(cfg.model, c, int(m.get("n_paths", 100_000)), cfg.seed)
        res.price, res.std_error, res.ci95 = mc.estimate, mc.std_error, mc.ci95
    elif name in ("kirk", "margrabe", "quadrature", "bs"):
        pe, pg, dt, x1, x2 = _lognormal_legs(cfg, name, warnings)
        rho = cfg.model.rho
        if name == "kirk":
            res.price = kirk_spread(SpreadInputs(x1, x2, c.cost, pe.sigma, pg.sigma, rho, dt, c.r_f))
        elif name == "quadrature":
            res.price = spread_price_quadrature(x1, x2, c.cost, pe.sigma, pg.sigma, rho, dt, c.r_f,
                                                int(m.get("n_nodes", 64)))
        elif name == "margrabe":
            if c.cost != 0:
                raise ConfigError("contract.cost", "margrabe needs cost == 0")
            res.price = margrabe(x1, x2, pe.sigma, pg.sigma, rho, dt)
        else:
            if pg.sigma > 0:
                warnings.append("bs treats the gas leg as deterministic")
            res.price = bs_call_prepaid(x1, x2 + c.cost * math.exp(-c.r_f * dt), pe.sigma, dt)
    elif name == "merton_series":
        pe, pg, dt = _require_single_day_merton(cfg, name)
        if pg.sigma > 0 or pg.lam > 0:
            warnings.append("merton_series treats the gas leg as deterministic")
        strike = c.cost + c.heat_rate * pg.s0 * math.exp((pg.r - pg.q) * dt)
        # Re-express the drift so that the strike is discounted at r_f.
        eff = MertonParams(pe.s0, c.r_f, pe.q + c.r_f - pe.r, pe.sigma, pe.lam, pe.m, pe.s)
        ms = merton_series(eff, strike, dt, float(m.get("tail_tol", 1e-12)))
        res.price = ms.price
        res.convergence = {"terms_evaluated": ms.n_terms, "weight_sum": ms.weight_sum,
                           "tail_mass_bound": ms.tail_bound, "converged": True}
    elif name == "linear_reduction":
        for key in ("a", "b", "gas_forward", "gas_sigma"):
            if key not in m:
                raise ConfigError(f"method.{key}", "required for linear_reduction")
        jumps = None
        if m.get("jumps", False):
            if not isinstance(cfg.model, MertonModel):
                raise ConfigError("method.jumps", "jumps need the merton model family")
            jumps = cfg.model.gas
        try:
            res.price = linear_reduction_price(m["a"], m["b"], m.get("map_kind", "identity"), m["gas_forward"],
                                               m["gas_sigma"], c, jumps)
        except ValueError as exc:
            raise ConfigError("method", str(exc)) from None
    elif name == "series":
        pe, pg, dt = _require_single_day_merton(cfg, name)
        t = m.get("truncation", {})
        policy = adaptive_truncation(t.get("stop_tol", 1e-6), t.get("max_diagonal", 60),
                                     t.get("weight_tail_tol", 1e-8))
        price, report = jump_series_price(pe, pg, cfg.model.rho, c.cost, dt, c.r_f, inner=m.get("inner", "kirk"),
                                          policy=policy, heat_rate=c.heat_rate, n_nodes=int(m.get("n_nodes", 64)))
        res.price, res.convergence = price, report.to_dict()
    else:  # pragma: no cover - schema rejects unknown names
        raise ConfigError("method.name", f"unknown method {name!r}")

    try:
        f_e, f_g = expected_forwards(cfg.model, c)
        res.bounds = deng_bounds(max(f_e, 0.0), f_g, c).to_dict()
    except ValueError as exc:
        warnings.append(f"bounds unavailable: {exc}")
    return res


def _out_dir(args, cfg: RunConfig) -> Path:
    out = Path(args.out or cfg.output_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = RunConfig(cfg.model, cfg.contract, cfg.method, cfg.simulation, args.seed, cfg.output_dir)
    return cfg


def cmd_price(args) -> int:
    cfg = _load(args)
    stem = Path(args.config).stem
    out = _out_dir(args, cfg)
    code = EXIT_OK
    try:
        res = price_config(cfg)
    except SeriesNotConverged as exc:
        res = PriceResult(exc.partial, "series", cfg.seed, convergence=exc.report.to_dict(),
                          warnings=[str(exc)])
        code = EXIT_NOT_CONVERGED
    payload = res.to_dict()
    if not args.report:
        payload.pop("convergence", None)
    path = out / f"{stem}.price.json"
    dump_json(payload, path)
    line = f"{stem}: method={res.method} price={res.price:.10g}"
    if res.std_error is not None:
        line += f" se={res.std_error:.4g}"
    if res.convergence is not None:
        line += f" converged={str(res.convergence['converged']).lower()}"
    print(line)
    if args.report and res.convergence is not None:
        print(json.dumps(res.convergence))
    return code


def cmd_simulate(args) -> int:
    cfg = _load(args)
    if cfg.simulation is None:
        raise ConfigError("simulation", "required for simulate")
    s = cfg.simulation
    grid = TimeGrid(float(s["start"]), float(s["end"]), int(s["n_steps"]))
    model = cfg.model
    sim = simulate_merton_paths if isinstance(model, MertonModel) else simulate_two_factor
    try:
        pe, pg = sim(model.electricity, model.gas, model.rho, grid, int(s["n_paths"]), cfg.seed)
    except ValueError as exc:
        raise ConfigError("simulation", str(exc)) from None
    out = _out_dir(args, cfg)
    stem = Path(args.config).stem
    for tag, paths in (("electricity", pe), ("gas", pg)):
        paths.to_csv(out / f"{stem}.{tag}.csv")
        paths.to_binary(out / f"{stem}.{tag}.bin")
    print(f"{stem}: wrote {pe.n_paths} paths x {grid.n_steps + 1} points to {out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    fixture = None
    seed = args.seed if args.seed is not None else 0
    if args.config:
        cfg = load_config(args.config)
        if cfg.contract is None:
            raise ConfigError("contract", "required for validate --config")
        fixture = (cfg.model, cfg.contract)
        if args.seed is None:
            seed = cfg.seed
    sizes = {k: v for k, v in (("n_cases", args.n_cases), ("bounds_paths", args.n_paths),
                               ("oracle_paths", args.n_paths)) if v is not None}
    reports = run_suite(args.suite, seed, fixture, **sizes)
    out = Path(args.out or ".")
    for rep in reports:
        rep.write(out)
        n_ok = sum(c["passed"] for c in rep.checks)
        print(f"{rep.suite}: {'PASS' if rep.passed else 'FAIL'} ({n_ok}/{len(rep.checks)} checks)")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sparkspread", description="Spark spread option pricing")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="run config (JSON)")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--out", help="output directory")

    sp = sub.add_parser("price", help="price a contract")
    common(sp)
    sp.add_argument("--report", action="store_true", help="include the convergence report")
    sp.set_defaults(func=cmd_price)

    sp = sub.add_parser("simulate", help="export simulated spot paths")
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("validate", help="run oracle cross-checks")
    sp.add_argument("suite", choices=SUITES)
    common(sp, config_required=False)
    sp.add_argument("--n-cases", type=int, help="bound sweep size")
    sp.add_argument("--n-paths", type=int, help="Monte Carlo paths per check")
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
