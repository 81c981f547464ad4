"""
Thrift index measurement from national-accounts panels.

The index for a country-year is minus the change in the consumption/capital
ratio over the change in the capital growth rate. It equals one if capital
grows only through consumption forgone, and zero if consumption/capital does
not respond to capital growth at all.
"""

__version__ = "0.1.0"

from .panel import (
    CountryPanel,
    DerivedPoint,
    Observation,
    PanelError,
    ScreenConfig,
    ScreenedVariable,
    build_country_panel,
    consumption_ratio_series,
    derive_all,
    derive_points,
    first_difference,
    growth_rate_series,
)
from .estimators import (
    CountrySummary,
    RegressionResult,
    RegressionSpec,
    Regressor,
    Response,
    Weighting,
    country_summaries,
    country_theta_summary,
    demean_two_way,
    fit_panel_regression,
    pooled_weighted_theta,
    solve_weighted_least_squares,
    within_coefficient,
    yearly_weighted_theta,
)
from .dgp import (
    ScenarioKind,
    ScenarioParams,
    random_scenarios,
    simulate,
    simulate_balanced,
    simulate_free_growth,
    simulate_thrift,
)
from .wid import RawObservation, VariableMap, assemble_dataset, fetch_wid_bulk, parse_wid_csv

__all__ = [
    "CountryPanel",
    "CountrySummary",
    "DerivedPoint",
    "Observation",
    "PanelError",
    "RawObservation",
    "RegressionResult",
    "RegressionSpec",
    "Regressor",
    "Response",
    "ScenarioKind",
    "ScenarioParams",
    "ScreenConfig",
    "ScreenedVariable",
    "VariableMap",
    "Weighting",
    "assemble_dataset",
    "build_country_panel",
    "consumption_ratio_series",
    "country_summaries",
    "country_theta_summary",
    "demean_two_way",
    "derive_all",
    "derive_points",
    "fetch_wid_bulk",
    "first_difference",
    "fit_panel_regression",
    "growth_rate_series",
    "parse_wid_csv",
    "pooled_weighted_theta",
    "random_scenarios",
    "simulate",
    "simulate_balanced",
    "simulate_free_growth",
    "simulate_thrift",
    "solve_weighted_least_squares",
    "within_coefficient",
    "yearly_weighted_theta",
]
