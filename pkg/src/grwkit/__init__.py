"""Numerical geometry of spacelike hypersurfaces in warped-product spacetimes."""
