"""Spot-price model parameters, seasonal levels and analytic moments.

Two model families are supported:

* a two-factor mean-reverting model with jumps, used arithmetically for
  electricity (``S = L(t) + X + Y``) and geometrically for gas
  (``ln S = ln L(t) + X + Y``);
* a Merton jump diffusion ``dS/S- = (r - q - lam*kappa) dt + sigma dB + (e^J - 1) dN``.

Parameter sets are frozen dataclasses and serialize to plain dicts tagged
with :data:`SCHEMA_VERSION`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

SCHEMA_VERSION = "sparkspread-params-v1"


@dataclass(frozen=True)
class SeasonalFunction:
    """Deterministic level ``c0 + c1*t + sum_k a_k sin(2 pi t / P_k + phi_k)``.

    ``harmonics`` holds ``(amplitude, period, phase)`` triples.  If
    ``positive_on`` is given, the level is checked to be strictly positive
    on ``[0, positive_on]`` at construction (required for gas levels).
    """

    c0: float
    c1: float = 0.0
    harmonics: tuple[tuple[float, float, float], ...] = ()
    positive_on: float | None = None

    def __post_init__(self):
        harmonics = tuple(tuple(float(v) for v in h) for h in self.harmonics)
        for h in harmonics:
            if len(h) != 3:
                raise ValueError(f"harmonics: expected (amplitude, period, phase), got {h}")
            if not h[1] > 0:
                raise ValueError(f"harmonics: period must be positive, got {h[1]}")
        object.__setattr__(self, "harmonics", harmonics)
        if not (math.isfinite(self.c0) and math.isfinite(self.c1)):
            raise ValueError("c0 and c1 must be finite")
        if self.positive_on is not None:
            self.check_positive(self.positive_on)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self.c0 + self.c1 * t
        for amp, period, phase in self.harmonics:
            out = out + amp * np.sin(2.0 * np.pi * t / period + phase)
        return out if out.ndim else float(out)

    def check_positive(self, horizon: float) -> None:
        """Raise ``ValueError`` unless the level is > 0 on ``[0, horizon]``."""
        if horizon < 0:
            raise ValueError("horizon must be nonnegative")
        # Cheap sufficient condition first, then a dense scan resolving the
        # shortest period with ~200 points.
        floor = self.c0 + min(0.0, self.c1 * horizon) - sum(abs(h[0]) for h in self.harmonics)
        if floor > 0:
            return
        n = 10_001
        if self.harmonics:
            shortest = min(h[1] for h in self.harmonics)
            n = max(n, int(200 * horizon / shortest) + 1)
        ts = np.linspace(0.0, horizon, min(n, 2_000_001))
        lo = float(np.min(self(ts)))
        if not lo > 0:
            raise ValueError(f"seasonal level must be positive on [0, {horizon}], min is {lo:.6g}")

    def to_dict(self) -> dict:
        d = {"c0": self.c0, "c1": self.c1, "harmonics": [list(h) for h in self.harmonics]}
        if self.positive_on is not None:
            d["positive_on"] = self.positive_on
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SeasonalFunction":
        return cls(
            c0=float(d["c0"]),
            c1=float(d.get("c1", 0.0)),
            harmonics=tuple(tuple(h) for h in d.get("harmonics", ())),
            positive_on=d.get("positive_on"),
        )


def seasonal_eval(fn: SeasonalFunction, t):
    """Evaluate the seasonal level at time(s) ``t >= 0``."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("t must be nonnegative")
    return fn(t)


@dataclass(frozen=True)
class TwoFactorJumpParams:
    """Coefficients of one commodity in the two-factor OU-with-jumps model.

    ``X`` is the normal-variation factor (rate ``alpha``, vol ``sigma``),
    ``Y`` the spike factor (rate ``beta``) driven by ``eta`` times a compound
    Poisson process with intensity ``jump_intensity`` and N(jump_mean,
    jump_sd^2) sizes.
    """

    alpha: float
    sigma: float
    beta: float
    eta: float
    jump_intensity: float
    jump_mean: float
    jump_sd: float
    seasonal: SeasonalFunction
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if self.beta < self.alpha:
            raise ValueError(f"beta must be >= alpha (spikes revert faster), got beta={self.beta} < alpha={self.alpha}")
        for name in ("sigma", "eta", "jump_intensity", "jump_sd"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "sigma": self.sigma,
            "beta": self.beta,
            "eta": self.eta,
            "jump_intensity": self.jump_intensity,
            "jump_mean": self.jump_mean,
            "jump_sd": self.jump_sd,
            "seasonal": self.seasonal.to_dict(),
            "x0": self.x0,
            "y0": self.y0,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TwoFactorJumpParams":
        kw = {k: float(d[k]) for k in ("alpha", "sigma", "beta", "eta", "jump_intensity", "jump_mean", "jump_sd")}
        return cls(
            seasonal=SeasonalFunction.from_dict(d["seasonal"]),
            x0=float(d.get("x0", 0.0)),
            y0=float(d.get("y0", 0.0)),
            **kw,
        )


@dataclass(frozen=True)
class MertonParams:
    """Merton jump diffusion; ``lam`` is the jump intensity (``"lambda"`` in JSON)."""

    s0: float
    r: float
    q: float = 0.0
    sigma: float = 0.0
    lam: float = 0.0
    m: float = 0.0
    s: float = 0.0

    def __post_init__(self):
        if not self.s0 > 0:
            raise ValueError(f"s0 must be positive, got {self.s0}")
        for name in ("sigma", "lam", "s"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")

    @property
    def kappa(self) -> float:
        return merton_kappa(self)

    def to_dict(self) -> dict:
        return {"s0": self.s0, "r": self.r, "q": self.q, "sigma": self.sigma,
                "lambda": self.lam, "m": self.m, "s": self.s}

    @classmethod
    def from_dict(cls, d: dict) -> "MertonParams":
        return cls(s0=float(d["s0"]), r=float(d["r"]), q=float(d.get("q", 0.0)),
                   sigma=float(d.get("sigma", 0.0)), lam=float(d.get("lambda", 0.0)),
                   m=float(d.get("m", 0.0)), s=float(d.get("s", 0.0)))


@dataclass(frozen=True)
class Contract:
    """Spark spread contract: payoff ``(F_e - heat_rate*F_g - cost)^+`` paid at ``tau``.

    The delivery window ``[tau1, tau2]`` may collapse to a single day
    (``tau1 == tau2``), which is the day-ahead setting of the closed forms.
    """

    t: float
    tau: float
    tau1: float
    tau2: float
    heat_rate: float
    cost: float = 0.0
    r_f: float = 0.0
    grid_step: float = 1.0 / 365.0

    def __post_init__(self):
        if not self.t < self.tau:
            raise ValueError(f"tau: must exceed t (got t={self.t}, tau={self.tau})")
        if not self.tau <= self.tau1:
            raise ValueError(f"tau1: must be >= tau (got tau={self.tau}, tau1={self.tau1})")
        if not self.tau1 <= self.tau2:
            raise ValueError(f"tau1: must not exceed tau2 (got tau1={self.tau1}, tau2={self.tau2})")
        if not self.heat_rate > 0:
            raise ValueError(f"heat_rate: must be positive, got {self.heat_rate}")
        if self.cost < 0:
            raise ValueError(f"cost: must be nonnegative, got {self.cost}")
        if not self.grid_step > 0:
            raise ValueError(f"grid_step: must be positive, got {self.grid_step}")
        if self.tau2 > self.tau1:
            n = (self.tau2 - self.tau1) / self.grid_step
            if n < 1 - 1e-9 or abs(n - round(n)) > 1e-6:
                raise ValueError(
                    f"grid_step: must divide tau2 - tau1 = {self.tau2 - self.tau1} into whole steps, got {n:.6g}"
                )

    @property
    def time_to_maturity(self) -> float:
        return self.tau - self.t

    @property
    def discount(self) -> float:
        return math.exp(-self.r_f * (self.tau - self.t))

    @property
    def single_day(self) -> bool:
        return self.tau1 == self.tau2

    def to_dict(self) -> dict:
        return {"t": self.t, "tau": self.tau, "tau1": self.tau1, "tau2": self.tau2,
                "heat_rate": self.heat_rate, "cost": self.cost, "r_f": self.r_f,
                "grid_step": self.grid_step}

    @classmethod
    def from_dict(cls, d: dict) -> "Contract":
        return cls(**{k: float(v) for k, v in d.items()})


def ou_moments(alpha: float, sigma: float, x0: float, t: float) -> tuple[float, float]:
    """Conditional mean and variance of ``dX = -alpha X dt + sigma dB`` after time ``t``.

    ``t = math.inf`` gives the stationary moments ``(0, sigma^2 / (2 alpha))``.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if sigma < 0 or t < 0:
        raise ValueError("sigma and t must be nonnegative")
    decay = math.exp(-alpha * t)
    mean = x0 * decay if decay > 0 else 0.0
    var = sigma * sigma * -math.expm1(-2.0 * alpha * t) / (2.0 * alpha)
    return mean, var


def merton_kappa(params: MertonParams) -> float:
    """Mean relative jump size ``E[e^J] - 1 = exp(m + s^2/2) - 1``."""
    return math.expm1(params.m + 0.5 * params.s * params.s)


Params = Union[TwoFactorJumpParams, MertonParams]


def params_to_dict(params: Params) -> dict:
    family = "merton" if isinstance(params, MertonParams) else "two_factor"
    return {"schema": SCHEMA_VERSION, "family": family, "params": params.to_dict()}


def params_from_dict(d: dict) -> Params:
    if d.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"schema: expected {SCHEMA_VERSION!r}, got {d.get('schema')!r}")
    family = d.get("family")
    if family == "merton":
        return MertonParams.from_dict(d["params"])
    if family == "two_factor":
        return TwoFactorJumpParams.from_dict(d["params"])
    raise ValueError(f"family: unknown model family {family!r}")


def save_params(params: Params, path: str | Path) -> None:
    Path(path).write_text(json.dumps(params_to_dict(params), indent=2) + "\n")


def load_params(path: str | Path) -> Params:
    return params_from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class TwoFactorModel:
    """Arithmetic electricity and geometric gas, Brownians correlated by ``rho``."""

    electricity: TwoFactorJumpParams
    gas: TwoFactorJumpParams
    rho: float = 0.0
    family = "two_factor"

    def __post_init__(self):
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError(f"rho: must lie in [-1, 1], got {self.rho}")

    def to_dict(self) -> dict:
        return {"family": self.family, "rho": self.rho,
                "electricity": self.electricity.to_dict(), "gas": self.gas.to_dict()}


@dataclass(frozen=True)
class MertonModel:
    """Two Merton jump diffusions with ``rho``-correlated Brownians and independent jumps."""

    electricity: MertonParams
    gas: MertonParams
    rho: float = 0.0
    family = "merton"

    def __post_init__(self):
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError(f"rho: must lie in [-1, 1], got {self.rho}")

    def to_dict(self) -> dict:
        return {"family": self.family, "rho": self.rho,
                "electricity": self.electricity.to_dict(), "gas": self.gas.to_dict()}


SpotModel = Union[TwoFactorModel, MertonModel]


def model_from_dict(d: dict) -> SpotModel:
    family = d.get("family")
    if family == "merton":
        return MertonModel(MertonParams.from_dict(d["electricity"]), MertonParams.from_dict(d["gas"]),
                           float(d.get("rho", 0.0)))
    if family == "two_factor":
        return TwoFactorModel(TwoFactorJumpParams.from_dict(d["electricity"]),
                              TwoFactorJumpParams.from_dict(d["gas"]), float(d.get("rho", 0.0)))
    raise ValueError(f"family: unknown model family {family!r}")
