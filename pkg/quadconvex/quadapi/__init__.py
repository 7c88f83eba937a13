"""Numerical library for convexity analysis of real and complex quadratic map images."""
