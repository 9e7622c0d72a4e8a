"""Approximate compressed-sensing acquisition lab for ECG signals."""
__version__ = "0.1.0"
