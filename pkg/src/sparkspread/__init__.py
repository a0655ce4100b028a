"""Spark spread option pricing under jump-diffusion spot models."""
from .models import (
    SCHEMA_VERSION,
    Contract,
    MertonModel,
    MertonParams,
    SeasonalFunction,
    TwoFactorJumpParams,
    TwoFactorModel,
    merton_kappa,
    ou_moments,
    seasonal_eval,
)
from .pricing_closed import (
    BoundsResult,
    SpreadInputs,
    bs_call_prepaid,
    deng_bounds,
    kirk_spread,
    linear_reduction_price,
    margrabe,
    merton_series_price,
)
from .pricing_series import (
    ConvergenceReport,
    SeriesNotConverged,
    TruncationPolicy,
    adaptive_truncation,
    jump_series_price,
    spread_price_quadrature,
    term_transform,
)
from .mc_oracle import MCResult, bound_containment_sweep, mc_spark_spread
from .simulate import PathSet, TimeGrid, forward_from_paths, simulate_merton, simulate_two_factor

__version__ = "0.1.0"
