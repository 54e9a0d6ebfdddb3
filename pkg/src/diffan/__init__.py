"""Causal discovery by topological ordering with diffusion-trained score networks."""

__version__ = "0.3.0"
