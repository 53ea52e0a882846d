"""Inferring unknown constraints of convex forward problems from
accepted and rejected decisions."""

__version__ = "0.1.0"
