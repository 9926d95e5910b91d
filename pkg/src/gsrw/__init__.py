"""Generalized-Sibuya squirrel random walk: exact series, closed forms, Monte Carlo."""

__version__ = "0.1.0"
