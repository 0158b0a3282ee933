"""Synthetic-data curation pipeline for few-shot object detection."""

from . import compositor, embstore, evaluator, fpfilter, prompts, selector  # noqa: F401

__version__ = "0.1.0"
