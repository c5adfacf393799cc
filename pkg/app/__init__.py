"""
linkfit: data-driven conditional expectations, likelihood ratios and fixed points

Shallow-network estimators trained through link functions, with quadrature
oracles for validation and a reproducible command-line experiment runner.
"""

__version__ = "1.0.0"
