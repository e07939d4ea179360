"""Numerical toolkit for uniformly convex W-hyperbolic spaces.

Geodesic model spaces, moduli of convexity, fixed point and
metastability checks, projections and proximal maps.
"""

__version__ = "0.1.0"
