"""Decoherence-minimizing gate synthesis against arbitrary bath spectra."""

__version__ = "0.1.0"
