"""
Models package for ATE estimation, simulation and diagnostics
"""
