"""Deterministic seeded 2D apartment simulation."""
