"""
Lasso ATE Application Package

Regression-adjusted average treatment effect estimation for completely
randomized experiments, with a Monte Carlo harness and condition diagnostics
"""

__version__ = "0.1.0"
__author__ = "Lasso ATE Team"
