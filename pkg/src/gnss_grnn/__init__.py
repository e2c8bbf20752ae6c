"""Forecasting toolkit for GNSS permanent-station position time series.

A Gaussian-kernel rolling-window predictor and a Theta-method baseline,
scored with sMAPE / StD / MAbs over rolling-origin backtests, plus gap
detection and a station-batch comparison harness.
"""

__version__ = "0.1.0"

from .errors import (
    BandwidthTooSmallError,
    DataError,
    NumericError,
    ParseError,
    UndefinedMetricError,
)
from .grnn import (
    AdaptiveForecastResult,
    AdaptiveResult,
    BandwidthRule,
    ForecastResult,
    GrnnConfig,
    GrnnState,
    Mode,
    Origin,
    adaptive_forecast_series,
    adaptive_predict,
    advance,
    compute_weights,
    forecast_series,
    gaussian_kernel,
    manual_walk,
    predict_one,
    resolve_bandwidth,
)
from .harness import (
    ComparisonReport,
    EvaluationSettings,
    MethodTiming,
    StationReport,
    SweepResult,
    SweepRow,
    SyntheticKind,
    SyntheticParams,
    compare_methods,
    evaluate_station,
    evaluate_stations,
    generate_synthetic,
    run_sweep,
    time_methods,
    write_reports_csv,
    write_reports_json,
    write_sweep_csv,
)
from .metrics import (
    MetricsReport,
    PredictionPairs,
    compute_report,
    mean_abs_error,
    smape,
    smape_as_printed,
    std_of_errors,
)
from .series import (
    Component,
    ComponentSeries,
    GapReport,
    GapSpan,
    SeriesFormat,
    SeriesState,
    StationSeries,
    amplitude,
    compute_anomaly,
    decimal_year_to_mjd,
    detect_gaps,
    mean_center,
    mjd_to_decimal_year,
    parse_series,
    write_series_csv,
)
from .theta import ThetaFit, ThetaModel, estimate_theta, fit_theta_model, theta_backtest, theta_forecast

__all__ = [
    "AdaptiveForecastResult",
    "AdaptiveResult",
    "BandwidthRule",
    "BandwidthTooSmallError",
    "ComparisonReport",
    "Component",
    "ComponentSeries",
    "DataError",
    "EvaluationSettings",
    "ForecastResult",
    "GapReport",
    "GapSpan",
    "GrnnConfig",
    "GrnnState",
    "MethodTiming",
    "MetricsReport",
    "Mode",
    "NumericError",
    "Origin",
    "ParseError",
    "PredictionPairs",
    "SeriesFormat",
    "SeriesState",
    "StationReport",
    "StationSeries",
    "SweepResult",
    "SweepRow",
    "SyntheticKind",
    "SyntheticParams",
    "ThetaFit",
    "ThetaModel",
    "UndefinedMetricError",
    "adaptive_forecast_series",
    "adaptive_predict",
    "advance",
    "amplitude",
    "compare_methods",
    "compute_anomaly",
    "compute_report",
    "compute_weights",
    "decimal_year_to_mjd",
    "detect_gaps",
    "estimate_theta",
    "evaluate_station",
    "evaluate_stations",
    "fit_theta_model",
    "forecast_series",
    "gaussian_kernel",
    "generate_synthetic",
    "manual_walk",
    "mean_abs_error",
    "mean_center",
    "mjd_to_decimal_year",
    "parse_series",
    "predict_one",
    "resolve_bandwidth",
    "run_sweep",
    "smape",
    "smape_as_printed",
    "std_of_errors",
    "theta_backtest",
    "theta_forecast",
    "time_methods",
    "write_reports_csv",
    "write_reports_json",
    "write_series_csv",
    "write_sweep_csv",
]
