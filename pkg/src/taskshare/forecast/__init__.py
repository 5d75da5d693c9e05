from .arima import (
    DEFAULT_GRID,
    ArimaError,
    ArimaModel,
    ArimaOrder,
    ConvergenceError,
    DegenerateSeriesWarning,
    FitRejected,
    SeriesTooShort,
    css_residuals,
    difference,
    fit_arima,
    hannan_rissanen,
    integrate,
    is_invertible,
    is_stationary,
    select_and_fit,
    select_order,
)
from .evaluate import (
    EvaluationError,
    EvaluationRow,
    ForecastPoint,
    SuiteResult,
    forecast_suite,
    mape,
    mape_detail,
    one_step_means,
    rolling_one_step,
    write_evaluation_csv,
    write_forecasts_csv,
)
