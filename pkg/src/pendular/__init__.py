"""Positive-P simulation of a pumped cavity with a moving end mirror."""
__version__ = "0.1.0"
