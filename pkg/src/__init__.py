"""Reweighted Gaussian belief propagation toolkit."""
