"""Repeated-run comparison of the two search modes and its statistics."""

from noveltest.experiments.comparison import ALPHA, ComparisonReport, RunSummary, run_comparison
from noveltest.experiments.report import ReportError, write_report
from noveltest.experiments.stats import average_ranks, mann_whitney_u, u_statistic, vargha_delaney_a12

__all__ = [
    "ALPHA",
    "ComparisonReport",
    "ReportError",
    "RunSummary",
    "average_ranks",
    "mann_whitney_u",
    "run_comparison",
    "u_statistic",
    "vargha_delaney_a12",
    "write_report",
]
