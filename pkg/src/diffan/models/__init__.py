"""Domain value types: graphs, orderings, datasets and the score network."""
