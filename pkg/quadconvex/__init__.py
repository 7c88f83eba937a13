"""Convexity analysis of images of quadratic maps."""

from .const import NAME, VERSION

__all__ = ["NAME", "VERSION"]
