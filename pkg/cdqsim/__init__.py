"""Digitized counter-diabatic annealing simulator."""

__version__ = "0.1.0"
