"""
Test package for the lasso ATE toolkit
"""
