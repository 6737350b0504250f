"""Cyclic communication games on processes with programmable causal order."""

__version__ = "0.1.0"
