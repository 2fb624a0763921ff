"""Collision avoidance by reciprocal projections onto generalized Voronoi cells."""

__version__ = "0.1.0"
