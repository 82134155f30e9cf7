"""Local/global complex temporal event forecasting."""

__version__ = "0.1.0"
