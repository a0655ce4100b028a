"""Exact-step path simulation for both spot models.

Random numbers come from Philox4x64 (a counter-based generator).  Paths are
grouped in blocks of :data:`BLOCK_SIZE`; block ``b`` of a run with seed
``s`` uses the key ``(s, b)``, and always draws variates for a full block
before truncating.  Consequently a path's values depend only on
``(seed, path index)``: changing ``n_paths`` or the number of worker threads
never changes the paths that are common to both runs.
"""
from __future__ import annotations

import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .models import Contract, MertonParams, TwoFactorJumpParams, merton_kappa, ou_moments

BLOCK_SIZE = 8192
STREAM_POLICY = f"philox4x64 key=(seed, block), block_size={BLOCK_SIZE}, full-block draws"
_BIN_MAGIC = b"SSPATH01"


@dataclass(frozen=True)
class TimeGrid:
    start: float
    end: float
    n_steps: int

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError(f"grid start {self.start} must be < end {self.end}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError(f"n_steps must be a positive integer, got {self.n_steps}")

    @property
    def step(self) -> float:
        return (self.end - self.start) / self.n_steps

    @property
    def times(self) -> np.ndarray:
        ts = self.start + self.step * np.arange(self.n_steps + 1)
        ts[-1] = self.end
        return ts


@dataclass(frozen=True)
class PathSet:
    """Simulated spot values, shape ``(n_paths, n_steps + 1)``."""

    grid: TimeGrid
    values: np.ndarray
    model_tag: str
    seed: int
    stream_policy: str = STREAM_POLICY

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != self.grid.n_steps + 1:
            raise ValueError(f"values shape {self.values.shape} inconsistent with grid of {self.grid.n_steps} steps")

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    def to_csv(self, path: str | Path) -> None:
        """One row per path; the header row holds the grid times."""
        header = ",".join(repr(float(t)) for t in self.grid.times)
        with open(path, "w", newline="\n") as fh:
            fh.write(header + "\n")
            for row in self.values:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")

    def to_binary(self, path: str | Path) -> None:
        """Magic, uint64 n_paths, uint64 n_cols, grid times, values; all little-endian, row-major."""
        n, c = self.values.shape
        with open(path, "wb") as fh:
            fh.write(_BIN_MAGIC)
            fh.write(struct.pack("<QQ", n, c))
            fh.write(np.asarray(self.grid.times, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(self.values, dtype="<f8").tobytes())


def read_csv_paths(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(times, values)`` from a file written by :meth:`PathSet.to_csv`."""
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return data[0], data[1:]


def read_binary_paths(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    raw = Path(path).read_bytes()
    if raw[:8] != _BIN_MAGIC:
        raise ValueError("not a sparkspread path dump")
    n, c = struct.unpack("<QQ", raw[8:24])
    body = np.frombuffer(raw, dtype="<f8", offset=24)
    return body[:c].copy(), body[c:].reshape(n, c).copy()


def worker_count() -> int:
    env = os.environ.get("SPARKSPREAD_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def block_rng(seed: int, block: int) -> np.random.Generator:
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must fit in 64 bits, got {seed}")
    return np.random.Generator(np.random.Philox(key=(block << 64) | seed))


def map_blocks(fn: Callable[[int, int], np.ndarray], n_paths: int, workers: int | None = None) -> list:
    """Call ``fn(block, size)`` for every block and return results in block order."""
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    n_blocks = -(-n_paths // BLOCK_SIZE)
    sizes = [min(BLOCK_SIZE, n_paths - b * BLOCK_SIZE) for b in range(n_blocks)]
    workers = worker_count() if workers is None else workers
    if workers <= 1 or n_blocks == 1:
        return [fn(b, sizes[b]) for b in range(n_blocks)]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, range(n_blocks), sizes))


def _check_rho(rho: float) -> None:
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [-1, 1], got {rho}")


def _correlate(z: np.ndarray, rho: float) -> tuple[np.ndarray, np.ndarray]:
    return z[:, 0], rho * z[:, 0] + math.sqrt(1.0 - rho * rho) * z[:, 1]


def _jump_sums(rng: np.random.Generator, rate: float, m: float, s: float) -> np.ndarray:
    # Sum of N iid N(m, s^2) sizes is exactly N(N m, N s^2) given N.
    n = rng.poisson(rate, BLOCK_SIZE)
    z = rng.standard_normal(BLOCK_SIZE)
    return m * n + s * np.sqrt(n) * z


def ou_step_correlation(alpha_e: float, alpha_g: float, rho: float, dt: float) -> float:
    """Correlation of the exact OU noise terms of two factors driven by rho-correlated Brownians."""
    if rho == 0.0:
        return 0.0
    ce = -math.expm1(-2 * alpha_e * dt) / (2 * alpha_e)
    cg = -math.expm1(-2 * alpha_g * dt) / (2 * alpha_g)
    ceg = -math.expm1(-(alpha_e + alpha_g) * dt) / (alpha_e + alpha_g)
    return min(1.0, max(-1.0, rho * ceg / math.sqrt(ce * cg)))


def simulate_two_factor(
    params_e: TwoFactorJumpParams,
    params_g: TwoFactorJumpParams,
    rho: float,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    workers: int | None = None,
) -> tuple[PathSet, PathSet]:
    """Simulate arithmetic electricity and geometric gas spot paths.

    The normal factors ``X`` advance with their exact OU transition; the
    spike factors ``Y`` decay exactly and receive ``eta`` times the
    compound-Poisson increment of each step at the step end.  Time is
    measured on the grid's own clock, so seasonal levels are evaluated at
    ``grid.times``.
    """
    _check_rho(rho)
    times = grid.times
    lam_e = params_e.seasonal(times)
    lam_g = params_g.seasonal(times)
    if np.min(lam_g) <= 0:
        raise ValueError("gas seasonal level must be positive on the simulation grid")
    dt = grid.step
    n_cols = grid.n_steps + 1

    def consts(p):
        _, var = ou_moments(p.alpha, p.sigma, 0.0, dt)
        return math.exp(-p.alpha * dt), math.sqrt(var), math.exp(-p.beta * dt), p.jump_intensity * dt

    dx_e, sd_e, dy_e, rate_e = consts(params_e)
    dx_g, sd_g, dy_g, rate_g = consts(params_g)
    rho_step = ou_step_correlation(params_e.alpha, params_g.alpha, rho, dt)

    def block(b: int, size: int) -> np.ndarray:
        rng = block_rng(seed, b)
        out = np.empty((2, BLOCK_SIZE, n_cols))
        xe = np.full(BLOCK_SIZE, params_e.x0)
        ye = np.full(BLOCK_SIZE, params_e.y0)
        xg = np.full(BLOCK_SIZE, params_g.x0)
        yg = np.full(BLOCK_SIZE, params_g.y0)
        out[0, :, 0] = xe + ye
        out[1, :, 0] = xg + yg
        for i in range(1, n_cols):
            ze, zg = _correlate(rng.standard_normal((BLOCK_SIZE, 2)), rho_step)
            je = _jump_sums(rng, rate_e, params_e.jump_mean, params_e.jump_sd)
            jg = _jump_sums(rng, rate_g, params_g.jump_mean, params_g.jump_sd)
            xe = dx_e * xe + sd_e * ze
            xg = dx_g * xg + sd_g * zg
            ye = dy_e * ye + params_e.eta * je
            yg = dy_g * yg + params_g.eta * jg
            out[0, :, i] = xe + ye
            out[1, :, i] = xg + yg
        return out[:, :size]

    factors = np.concatenate(map_blocks(block, n_paths, workers), axis=1)
    s_e = lam_e + factors[0]
    s_g = lam_g * np.exp(factors[1])
    return (
        PathSet(grid, s_e, "two_factor/electricity", seed),
        PathSet(grid, s_g, "two_factor/gas", seed),
    )


def _merton_drift(p: MertonParams) -> float:
    return p.r - p.q - 0.5 * p.sigma**2 - p.lam * merton_kappa(p)


def simulate_merton(
    params_e: MertonParams,
    params_g: MertonParams,
    rho: float,
    T: float,
    n_paths: int,
    seed: int,
    workers: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Exact terminal samples ``(S_e(T), S_g(T))`` of two Merton jump diffusions.

    Brownian parts are rho-correlated; the Poisson counts and jump sizes are
    independent across commodities.
    """
    _check_rho(rho)
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    sq = math.sqrt(T)

    def block(b: int, size: int) -> np.ndarray:
        rng = block_rng(seed, b)
        ze, zg = _correlate(rng.standard_normal((BLOCK_SIZE, 2)), rho)
        je = _jump_sums(rng, params_e.lam * T, params_e.m, params_e.s)
        jg = _jump_sums(rng, params_g.lam * T, params_g.m, params_g.s)
        out = np.empty((2, BLOCK_SIZE))
        out[0] = params_e.s0 * np.exp(_merton_drift(params_e) * T + params_e.sigma * sq * ze + je)
        out[1] = params_g.s0 * np.exp(_merton_drift(params_g) * T + params_g.sigma * sq * zg + jg)
        return out[:, :size]

    res = np.concatenate(map_blocks(block, n_paths, workers), axis=1)
    return res[0], res[1]


def simulate_merton_paths(
    params_e: MertonParams,
    params_g: MertonParams,
    rho: float,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    workers: int | None = None,
) -> tuple[PathSet, PathSet]:
    """Merton spot paths on a grid; each step uses the exact log increment."""
    _check_rho(rho)
    dt = grid.step
    sq = math.sqrt(dt)
    n_cols = grid.n_steps + 1

    def block(b: int, size: int) -> np.ndarray:
        rng = block_rng(seed, b)
        logs = np.empty((2, BLOCK_SIZE, n_cols))
        logs[0, :, 0] = 0.0
        logs[1, :, 0] = 0.0
        for i in range(1, n_cols):
            ze, zg = _correlate(rng.standard_normal((BLOCK_SIZE, 2)), rho)
            je = _jump_sums(rng, params_e.lam * dt, params_e.m, params_e.s)
            jg = _jump_sums(rng, params_g.lam * dt, params_g.m, params_g.s)
            logs[0, :, i] = logs[0, :, i - 1] + _merton_drift(params_e) * dt + params_e.sigma * sq * ze + je
            logs[1, :, i] = logs[1, :, i - 1] + _merton_drift(params_g) * dt + params_g.sigma * sq * zg + jg
        return logs[:, :size]

    logs = np.concatenate(map_blocks(block, n_paths, workers), axis=1)
    return (
        PathSet(grid, params_e.s0 * np.exp(logs[0]), "merton/electricity", seed),
        PathSet(grid, params_g.s0 * np.exp(logs[1]), "merton/gas", seed),
    )


def window_mask(times: np.ndarray, tau1: float, tau2: float) -> np.ndarray:
    tol = 1e-9 * max(1.0, abs(tau2))
    return (times >= tau1 - tol) & (times <= tau2 + tol)


def forward_from_paths(paths: PathSet, contract: Contract, discount_inside_average: bool = True) -> np.ndarray:
    """Per-path delivery-window forward ``mean_i exp(-r_f (t_i - tau1)) S(t_i)``.

    The average runs over the grid points inside ``[tau1, tau2]``.
    """
    times = paths.grid.times
    if contract.tau1 < times[0] - 1e-12 or contract.tau2 > times[-1] + 1e-9 * max(1.0, abs(times[-1])):
        raise ValueError(
            f"delivery window [{contract.tau1}, {contract.tau2}] lies outside grid [{times[0]}, {times[-1]}]"
        )
    mask = window_mask(times, contract.tau1, contract.tau2)
    if not mask.any():
        raise ValueError("no grid point falls inside the delivery window")
    ts = times[mask]
    weights = np.exp(-contract.r_f * (ts - contract.tau1)) if discount_inside_average else np.ones(ts.size)
    return paths.values[:, mask] @ weights / ts.size


def expected_two_factor_spot(params: TwoFactorJumpParams, grid: TimeGrid, geometric: bool) -> np.ndarray:
    """Exact mean of the simulated spot on ``grid.times`` under the discrete scheme above.

    Jumps enter at step ends, so the spike factor after ``n`` steps is
    ``y0 d^n + eta * sum_k d^(n-k) C_k`` with ``d = exp(-beta dt)`` and
    ``C_k`` the compound-Poisson increment of step ``k``.
    """
    times = grid.times
    dt = grid.step
    n = np.arange(grid.n_steps + 1)
    elapsed = times - grid.start
    x_mean = params.x0 * np.exp(-params.alpha * elapsed)
    x_var = params.sigma**2 * -np.expm1(-2 * params.alpha * elapsed) / (2 * params.alpha)
    d = math.exp(-params.beta * dt)
    decay_pows = d ** n  # d^j for j = 0..n_steps
    rate = params.jump_intensity * dt
    if not geometric:
        geo = np.concatenate([[0.0], np.cumsum(decay_pows[:-1])])
        y_mean = params.y0 * decay_pows + params.eta * rate * params.jump_mean * geo
        return params.seasonal(times) + x_mean + y_mean
    u = params.eta * decay_pows[:-1]
    per_step = rate * np.expm1(u * params.jump_mean + 0.5 * (u * params.jump_sd) ** 2)
    log_mgf_y = params.y0 * decay_pows + np.concatenate([[0.0], np.cumsum(per_step)])
    return params.seasonal(times) * np.exp(x_mean + 0.5 * x_var + log_mgf_y)


def expected_merton_spot(params: MertonParams, elapsed) -> np.ndarray:
    return params.s0 * np.exp((params.r - params.q) * np.asarray(elapsed, dtype=float))
