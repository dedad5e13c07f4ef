"""Simulation of driven geometric phase gates on two trapped ions with Raman beams."""

__version__ = "0.1.0"
