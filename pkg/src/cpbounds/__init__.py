"""Exact LP/SDP relaxation bounds for packing points in the unit square."""

__version__ = "0.1.0"
