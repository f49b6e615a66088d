"""
Evaluation metrics and reports.
"""

# Local imports
from .regression import mae, rmse, spearman_rho
from .report import EvalReport, evaluate, from_json, relative_improvement, render_text, to_json, write_report

__all__ = [
    "EvalReport",
    "evaluate",
    "from_json",
    "mae",
    "relative_improvement",
    "render_text",
    "rmse",
    "spearman_rho",
    "to_json",
    "write_report",
]
