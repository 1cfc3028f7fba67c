"""Joint spectral function simulator for photon pairs from multi-stage fiber interferometers."""

__version__ = "0.1.0"
