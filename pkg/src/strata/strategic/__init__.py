"""Deliberative strategic layer: goals, plans, utility decisions, explanation."""
