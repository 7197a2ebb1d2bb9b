"""Classical-quantum arbitrarily varying wiretap channels at desk scale."""

__version__ = "0.1.0"
