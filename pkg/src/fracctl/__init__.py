"""Fractional-order control toolkit: identification, model reduction and FOPID tuning."""

__version__ = "0.1.0"
