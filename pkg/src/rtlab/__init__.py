"""Accuracy, robustness and their trade-offs for classical and quantum classifiers."""

__version__ = "0.1.0"
