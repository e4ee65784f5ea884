"""Desk-scale RAN slicing simulator with percentile-delay-aware DRL
training and cross-agent model personalization."""

__version__ = "0.1.0"
