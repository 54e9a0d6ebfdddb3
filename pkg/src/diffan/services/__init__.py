"""Algorithms: data simulation, diffusion training, ordering, pruning and metrics."""
