"""Adapter scripts feeding external model outputs into the synthdet pipeline."""

__version__ = "0.1.0"
