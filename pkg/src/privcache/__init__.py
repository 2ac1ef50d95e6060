"""Multiaccess coded caching with private demands."""
