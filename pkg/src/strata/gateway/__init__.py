"""Composition root: scenario loading, tick loop, trace, serving."""
