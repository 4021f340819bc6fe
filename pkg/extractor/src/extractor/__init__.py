"""Residual-stream extractor for number-pair rating prompts."""

__version__ = "0.1.0"

from .errors import ExtractorError, PrefillTokenizationError  # noqa: F401
