"""Trend-cycle state-space decomposition feeding cycle-augmented
regression-tree ensembles."""

from . import ecm, ensemble, kalman, panel, statespace, tree  # noqa: F401

__version__ = "0.1.0"
