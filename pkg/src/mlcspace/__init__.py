"""Grammar-defined search space for automated multi-label classification."""

__version__ = "0.1.0"
