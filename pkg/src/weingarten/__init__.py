"""Numerical companion for curvature equations on star-shaped and convex hypersurfaces."""
__version__ = "0.1.0"
