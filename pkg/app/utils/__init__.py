"""
Utility modules for the lasso ATE toolkit
"""
