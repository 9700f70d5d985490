"""Structure-preserving solvers for 3-D stochastic Maxwell equations."""
__version__ = "0.1.0"
