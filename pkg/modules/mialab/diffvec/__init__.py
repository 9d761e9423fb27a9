"""Difference-vector generator: item embeddings, per-user difference vectors and attack datasets."""
