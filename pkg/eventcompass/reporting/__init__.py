"""
EventCompass Reporting Module
"""

from .ablation_report import AblationReport, run_ablation, plot_comparison, plot_training_curves, ABLATIONS

__all__ = ["AblationReport", "run_ablation", "plot_comparison", "plot_training_curves", "ABLATIONS"]
