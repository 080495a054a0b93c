"""Unified watermarking engine and robustness benchmark for image, video, audio and text."""

__version__ = "0.1.0"
