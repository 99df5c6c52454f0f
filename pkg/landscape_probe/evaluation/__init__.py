"""Evaluation of curve shapes and classifiers."""
from landscape_probe.evaluation.curve_metrics import BumpReport, bump_report, misclassification_rate

__all__ = ["BumpReport", "bump_report", "misclassification_rate"]
