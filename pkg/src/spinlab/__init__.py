"""Exact and sampled analysis of Markov chains on two-spin systems."""

from .core import (
    Graph,
    GibbsTable,
    Pinning,
    TwoSpinSystem,
    conditional_table,
    enumerate_distribution,
    flip,
    gibbs_weight,
    magnetize,
    magnetize_table,
)

__all__ = [
    "Graph",
    "GibbsTable",
    "Pinning",
    "TwoSpinSystem",
    "conditional_table",
    "enumerate_distribution",
    "flip",
    "gibbs_weight",
    "magnetize",
    "magnetize_table",
]

__version__ = "0.1.0"
