"""Benchmark harness for the baseline schemes and the proposed protocol."""
from .grid import ExperimentGrid, GridRow, read_csv, run_grid, write_csv, write_gnuplot
from .schemes import KB, BenchParams, CostModel, SchemeKind, measure, median_cost, run_scheme
from .trends import Fit, TrendReport, fit_trends, linear_fit

__all__ = ["KB", "BenchParams", "CostModel", "ExperimentGrid", "Fit", "GridRow", "SchemeKind", "TrendReport",
           "fit_trends", "linear_fit", "measure", "median_cost", "read_csv", "run_grid", "run_scheme", "write_csv",
           "write_gnuplot"]
