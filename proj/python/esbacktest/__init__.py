"""Joint quantile/ES regression backtests for tail-risk forecasts."""

from ._esbacktest import (
    EsbError,
    __version__,
    cc_test,
    empirical_es,
    empirical_quantile,
    er_test,
    esr_bivariate,
    esr_intercept,
    fz0_loss,
    historical_simulation,
    oracle_forecasts,
    rank_by_fz0_loss,
    simulate,
    validate_pair,
)

__all__ = [
    "EsbError",
    "__version__",
    "cc_test",
    "empirical_es",
    "empirical_quantile",
    "er_test",
    "esr_bivariate",
    "esr_intercept",
    "fz0_loss",
    "historical_simulation",
    "oracle_forecasts",
    "rank_by_fz0_loss",
    "simulate",
    "validate_pair",
]
