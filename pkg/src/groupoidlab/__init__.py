"""Numerical laboratory for groupoid averaging, linearization experiments,
and momentum-map convexity certification."""

__version__ = "0.1.0"
