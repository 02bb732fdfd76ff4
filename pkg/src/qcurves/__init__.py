"""Quadratic Q-curve toolkit: newforms, periods, and L-ratio certification."""

__version__ = "0.1.0"
