"""Binding-site similarity pipeline with a parallel task farm."""

__version__ = "0.1.0"
