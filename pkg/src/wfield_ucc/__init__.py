"""Purified-ensemble (w-field) variational excited states with factorized UCCSD."""

__version__ = "0.1.0"
