"""Deterministic harness for simulating autonomous surface vessel voyages.

Replays recorded vessel traffic as moving obstacles, simulates the own
ship's sensors, controllers, and failover chain, and accumulates voyage
results against staged certification criteria.
"""

__version__ = "0.1.0"
