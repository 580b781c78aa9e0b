"""Pseudo-spectral E-MHD / Hall-MHD solver with continuation-criterion diagnostics."""

__version__ = "0.1.0"
