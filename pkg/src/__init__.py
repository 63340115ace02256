"""
mixtest - Homogeneity tests for Gaussian mixtures

Likelihood ratio and split likelihood ratio (universal inference) tests with a
reproducible Monte Carlo engine for their size and power.
"""

__version__ = "1.0.0"
