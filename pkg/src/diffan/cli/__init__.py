"""Command line interface for diffan."""
