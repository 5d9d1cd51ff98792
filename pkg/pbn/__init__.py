"""Classification from positive and biased negative (PbN) data."""

__version__ = "0.1.0"
