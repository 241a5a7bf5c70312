"""Stacked sparse autoencoders with a softmax head for depth-image sign classification."""

__version__ = "0.1.0"
