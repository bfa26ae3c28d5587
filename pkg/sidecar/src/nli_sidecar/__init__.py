"""Inference sidecar for the NLI diversity toolkit."""

__version__ = "0.1.0"
