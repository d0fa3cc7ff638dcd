"""Cohort-based citation rank mobility and impact inequality analysis."""

__version__ = "0.1.0"
