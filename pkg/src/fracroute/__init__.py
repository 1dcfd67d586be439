"""Fractal-traffic MPLS routing-cost toolkit and slotted fluid network simulator."""

__version__ = "0.1.0"
