"""Contextual-vector extraction sidecar for the bias-measurement toolkit."""

from .extract import ExtractorConfig, ExtractorError, ExtractReport, extract

__version__ = "0.1.0"
