"""Microgesture recognition and gesture-driven text editing at desk scale."""

__version__ = "0.1.0"
