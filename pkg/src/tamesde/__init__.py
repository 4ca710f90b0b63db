"""Tamed and implicit one-step schemes for SDEs with non-globally Lipschitz coefficients."""

__version__ = "0.1.0"
