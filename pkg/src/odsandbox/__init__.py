"""Bias-injection sandbox for auditing the group fairness of outlier detectors."""

__version__ = "0.1.0"
