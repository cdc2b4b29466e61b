"""Edge AI deployment operators, latency simulation and analysis."""

__version__ = "0.1.0"
