"""Embedding sidecar: transformer encoder behind a small JSON HTTP API."""

__version__ = "0.1.0"
