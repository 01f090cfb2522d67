"""Synthetic egocentric scene and spatio-temporal QA dataset generator."""

__version__ = "0.1.0"
