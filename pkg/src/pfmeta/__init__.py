"""Prevented-fraction meta-analysis with classical pooling and a hierarchical Bayesian model."""

__version__ = "0.1.0"
