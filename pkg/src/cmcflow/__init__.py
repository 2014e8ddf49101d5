"""Numerical tools for timelike hypersurfaces of constant positive mean curvature near de Sitter space.

Modules: dsgeom (ambient geometry), rotsym (spherically symmetric ODE),
igm (inverse Gauss map algebra), linmodes (linearized modes), stress
(energy tensor), meanc (mean curvature of normal graphs), evolve (d = 1
nonlinear evolution), battery (acceptance checks) and cli.
"""

__version__ = "0.1.0"
