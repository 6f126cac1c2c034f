"""Slow-Growing Trees with CART, forest, boosting and lasso baselines."""
__version__ = "0.1.0"
