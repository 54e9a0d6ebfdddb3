"""Utility helpers for paths, validation and logging."""
