"""Asynchronous stochastic Frank-Wolfe for nuclear-norm constrained problems."""
__version__ = "0.1.0"
