"""polyshield: verified polynomial policy programs as runtime safety shields."""

__version__ = "0.1.0"
