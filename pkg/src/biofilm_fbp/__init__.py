"""Free-boundary biofilm models on a fixed normalized domain."""

__version__ = "0.1.0"
