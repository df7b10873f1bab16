"""Fundamental PE estimation and PE-band trading evaluation.

A static fundamental PE level and a Markov mispricing state jointly
explain an observed PE series; exact filtering and smoothing recover
them, MAP EM learns the free parameters, and the trading layer turns
the estimates into band strategies benchmarked against buy-and-hold
with a bootstrap over portfolios.
"""

from .estimator import FundamentalPEModel
from .exceptions import (
    ConfigError,
    ConvergenceWarning,
    DataError,
    InferenceError,
    InvalidModelError,
    PedbnError,
)
from .inference import (
    FilterResult,
    PEEstimate,
    PosteriorBundle,
    ZPath,
    filtered_z_estimate,
    filtered_z_path,
    forward_filter,
    log_likelihood,
    map_pe,
    pairwise_smooth,
    smooth,
)
from .learning import (
    EmConfig,
    EmTrace,
    dirichlet_log_pdf,
    em_fit,
    log_posterior,
    log_prior,
    m_step,
    random_init,
)
from .market_data import (
    EarningsSeries,
    PriceSeries,
    QuarterlyEarnings,
    SplitSpec,
    build_observations,
    load_earnings_csv,
    load_price_csv,
    ttm_earnings,
    write_earnings_csv,
    write_price_csv,
)
from .model import (
    ModelParams,
    ObservationSeries,
    PriorSpec,
    SeriesTruth,
    StateGrids,
    concat_series,
    default_pe_grid,
    default_z_grid,
    emission_density,
    emission_matrix,
    generate_series,
    validate_grids,
    validate_params,
    validate_prior,
    validate_series,
)
from .portfolio import (
    BootstrapConfig,
    BootstrapReport,
    bootstrap,
    histogram,
    load_pool_csv,
)
from .trading import (
    BenchmarkResult,
    Comparison,
    StrategyConfig,
    StrategyResult,
    TradeLedger,
    TradeRecord,
    baseline_series,
    buy_and_hold,
    compare,
    run_strategy,
)

__version__ = "0.1.0"

__all__ = [
    "BenchmarkResult",
    "BootstrapConfig",
    "BootstrapReport",
    "Comparison",
    "ConfigError",
    "ConvergenceWarning",
    "DataError",
    "EarningsSeries",
    "EmConfig",
    "EmTrace",
    "FilterResult",
    "FundamentalPEModel",
    "InferenceError",
    "InvalidModelError",
    "ModelParams",
    "ObservationSeries",
    "PEEstimate",
    "PedbnError",
    "PosteriorBundle",
    "PriceSeries",
    "PriorSpec",
    "QuarterlyEarnings",
    "SeriesTruth",
    "SplitSpec",
    "StateGrids",
    "StrategyConfig",
    "StrategyResult",
    "TradeLedger",
    "TradeRecord",
    "ZPath",
    "baseline_series",
    "bootstrap",
    "build_observations",
    "buy_and_hold",
    "compare",
    "concat_series",
    "default_pe_grid",
    "default_z_grid",
    "dirichlet_log_pdf",
    "em_fit",
    "emission_density",
    "emission_matrix",
    "filtered_z_estimate",
    "filtered_z_path",
    "forward_filter",
    "generate_series",
    "histogram",
    "load_earnings_csv",
    "load_pool_csv",
    "load_price_csv",
    "log_likelihood",
    "log_posterior",
    "log_prior",
    "m_step",
    "map_pe",
    "pairwise_smooth",
    "random_init",
    "run_strategy",
    "smooth",
    "ttm_earnings",
    "validate_grids",
    "validate_params",
    "validate_prior",
    "validate_series",
    "write_earnings_csv",
    "write_price_csv",
]
