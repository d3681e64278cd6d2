"""Reactive tactical layer: behavior trees, leaf skills, command runtime."""
