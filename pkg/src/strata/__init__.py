"""strata: a dual-layer robot control stack.

Each robot runs two independent halves joined by a bounded message bus:
a deliberative strategic layer (goals, plans, language, explanation) and
a reactive tactical layer (behavior trees, sensors, actuators, safety
reflexes). A seeded 2D apartment simulation and a gateway service tie a
team of robots and a human together for search-and-retrieval runs.
"""

__version__ = "0.1.0"
