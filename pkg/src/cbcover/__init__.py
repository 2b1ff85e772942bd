"""Callback-sequence coverage criteria for event-driven apps."""

__version__ = "0.1.0"
