"""Rate experiments and their reports."""

from .experiments import EXPERIMENTS, run_all, run_experiment
from .fitting import SlopeFit, fit_slope
from .report import ExperimentReport, RateTable, emit_report, read_rate_table

__all__ = ["EXPERIMENTS", "run_all", "run_experiment", "SlopeFit", "fit_slope",
           "ExperimentReport", "RateTable", "emit_report", "read_rate_table"]
