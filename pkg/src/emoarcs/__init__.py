"""Emotional arcs from per-timepoint sentiment scores: smoothing, DTW k-medoids
families, clip precision and engagement regressions."""

__version__ = "0.1.0"
