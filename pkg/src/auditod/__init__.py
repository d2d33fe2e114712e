"""Unsupervised outlier detection and score fusion for award-level spending records."""

__version__ = "0.1.0"
