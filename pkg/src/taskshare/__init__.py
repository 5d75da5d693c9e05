"""Monthly task-share time series from job postings: aggregation, trends and ARIMA forecasts."""

from .ingest import CountsCube, MonthlyStats, Window
from .shares import Level, SeriesSet, TaskShareSeries
from .taxonomy import SocCode, TaxonomyIndex, WageTercile

__version__ = "0.1.0"
